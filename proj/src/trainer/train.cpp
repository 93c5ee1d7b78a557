#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "deepsep/trainer.hpp"

namespace deepsep {

void TrainConfig::validate() const {
    if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (!(validation_fraction >= 0.0 && validation_fraction <= 0.5)) {
        throw std::invalid_argument("validation fraction must lie in [0, 0.5]");
    }
}

namespace {

struct Prepared {
    std::vector<double> input;   // standardized
    std::vector<double> target;  // standardized with the input's scale
    IndicatorMode indicator;
    CaseKind kind;
};

std::vector<Prepared> prepare(std::span<const TrainingCase> data) {
    std::vector<Prepared> out;
    out.reserve(data.size());
    const std::size_t len = data.empty() ? 0 : data.front().input.size();
    for (const auto& c : data) {
        if (c.input.size() != len || c.target.size() != len) {
            throw ShapeError("training cases must share one segment length");
        }
        if ((c.kind == CaseKind::ArtifactToArtifact) != (c.indicator == IndicatorMode::Artifact)) {
            throw std::invalid_argument("training case indicator does not match its case kind");
        }
        const double s = segment_scale(c.input);
        Prepared p{c.input, c.target, c.indicator, c.kind};
        for (double& v : p.input) v /= s;
        for (double& v : p.target) v /= s;
        out.push_back(std::move(p));
    }
    return out;
}

// Packs the listed items into [B,1,L] input/target tensors. All items must
// share one indicator mode.
std::pair<Tensor, Tensor> pack(const std::vector<Prepared>& items, std::span<const std::size_t> idx,
                               IndicatorMode& mode) {
    const std::size_t len = items[idx[0]].input.size();
    mode = items[idx[0]].indicator;
    std::vector<double> x(idx.size() * len), y(idx.size() * len);
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const auto& it = items[idx[b]];
        if (it.indicator != mode) {
            throw std::logic_error("batch mixes signal and artifact indicator modes");
        }
        std::copy(it.input.begin(), it.input.end(), x.begin() + static_cast<std::ptrdiff_t>(b * len));
        std::copy(it.target.begin(), it.target.end(), y.begin() + static_cast<std::ptrdiff_t>(b * len));
    }
    return {Tensor::from({idx.size(), 1, len}, std::move(x)), Tensor::from({idx.size(), 1, len}, std::move(y))};
}

std::vector<double> per_sample_mse(const Tensor& pred, const Tensor& target) {
    const std::size_t b = pred.dim(0), len = pred.dim(2);
    std::vector<double> out(b, 0.0);
    const auto p = pred.data(), t = target.data();
    for (std::size_t i = 0; i < b; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
            const double d = p[i * len + j] - t[i * len + j];
            s += d * d;
        }
        out[i] = s / static_cast<double>(len);
    }
    return out;
}

// Homogeneous-indicator batches in a seed- and epoch-determined order.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<Prepared>& items,
                                                   std::vector<std::size_t> pool, std::size_t batch,
                                                   std::mt19937_64& rng) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (auto mode : {IndicatorMode::Signal, IndicatorMode::Artifact}) {
        std::vector<std::size_t> current;
        for (auto i : pool) {
            if (items[i].indicator != mode) continue;
            current.push_back(i);
            if (current.size() == batch) {
                batches.push_back(std::move(current));
                current.clear();
            }
        }
        if (!current.empty()) batches.push_back(std::move(current));
    }
    std::shuffle(batches.begin(), batches.end(), rng);
    return batches;
}

double validation_loss(const NetworkParams& model, const std::vector<Prepared>& items,
                       const std::vector<std::size_t>& val, std::size_t batch) {
    if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (auto mode : {IndicatorMode::Signal, IndicatorMode::Artifact}) {
        std::vector<std::size_t> group;
        for (auto i : val) {
            if (items[i].indicator == mode) group.push_back(i);
        }
        for (std::size_t start = 0; start < group.size(); start += batch) {
            const auto idx = std::span(group).subspan(start, std::min(batch, group.size() - start));
            IndicatorMode m;
            auto [x, y] = pack(items, idx, m);
            Tape tape = Tape::inference();
            const auto out = forward(tape, x, model, m).output;
            for (double l : per_sample_mse(out, y)) total += l;
        }
    }
    return total / static_cast<double>(val.size());
}

std::string describe_batch(const std::vector<Prepared>& items, std::span<const std::size_t> idx) {
    std::array<std::size_t, 3> counts{};
    for (auto i : idx) counts[static_cast<int>(items[i].kind) - 1]++;
    std::ostringstream os;
    os << "case1=" << counts[0] << " case2=" << counts[1] << " case3=" << counts[2];
    return os.str();
}

}  // namespace

TrainLog train(NetworkParams& model, std::span<const TrainingCase> data, const TrainConfig& cfg, TrainState* state) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("training data is empty");
    const auto items = prepare(data);
    if (items.front().input.size() < model.arch.largest_kernel()) {
        throw ShapeError("segments are shorter than the largest kernel");
    }

    TrainState local;
    TrainState& st = state ? *state : local;
    st.optimizer.config.lr = cfg.lr;

    // Fixed validation split, independent of epoch.
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    {
        auto split_rng = derived_rng(cfg.seed, 0, 3);
        std::shuffle(order.begin(), order.end(), split_rng);
    }
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(items.size())));
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(train_idx.begin(), train_idx.end());
    if (train_idx.empty()) throw std::invalid_argument("validation split leaves no training data");

    auto params = model.tensors();
    for (auto& p : params) p.ensure_grad();

    for (std::size_t epoch = st.epochs_done + 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        auto rng = derived_rng(cfg.seed, epoch, 4);
        const auto batches = make_batches(items, train_idx, cfg.batch, rng);

        EpochRecord rec;
        rec.epoch = epoch;
        double total = 0.0;
        std::size_t seen = 0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& idx = batches[bi];
            IndicatorMode mode;
            auto [x, y] = pack(items, idx, mode);
            Tape tape;
            const auto out = forward(tape, x, model, mode).output;
            const auto loss = mse_loss(tape, out, y);
            if (!std::isfinite(loss.item())) {
                throw TrainingDivergedError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                            std::to_string(bi + 1) + " (" + indicator_name(mode) + " mode, " +
                                            describe_batch(items, idx) + ")");
            }
            const auto losses = per_sample_mse(out, y);
            for (std::size_t b = 0; b < idx.size(); ++b) {
                const int k = static_cast<int>(items[idx[b]].kind) - 1;
                rec.case_loss[k] += losses[b];
                rec.case_count[k] += 1;
                total += losses[b];
            }
            seen += idx.size();
            tape.backward(loss);
            adam_step(params, st.optimizer);
        }
        rec.train_loss = total / static_cast<double>(seen);
        for (int k = 0; k < 3; ++k) {
            if (rec.case_count[k]) rec.case_loss[k] /= static_cast<double>(rec.case_count[k]);
        }
        rec.validation_loss = validation_loss(model, items, val, cfg.batch);
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        st.log.epochs.push_back(rec);
        st.epochs_done = epoch;
        if (cfg.verbose) {
            std::cerr << "epoch " << epoch << "/" << cfg.epochs << "  train " << rec.train_loss << "  val "
                      << rec.validation_loss << "  (" << std::fixed << std::setprecision(1) << rec.wall_seconds
                      << " s)" << std::defaultfloat << std::setprecision(6) << '\n';
        }
        if (cfg.checkpoint_interval > 0 && epoch % cfg.checkpoint_interval == 0) {
            quantize_to_checkpoint_precision(model, st.optimizer);
            if (!cfg.checkpoint_dir.empty()) {
                std::filesystem::create_directories(cfg.checkpoint_dir);
                std::ostringstream name;
                name << "epoch_" << std::setw(4) << std::setfill('0') << epoch;
                save_checkpoint(cfg.checkpoint_dir / name.str(), model, st);
            }
        }
    }
    return st.log;
}

void quantize_to_checkpoint_precision(NetworkParams& model, AdamState& optimizer) {
    auto round = [](double v) { return static_cast<double>(static_cast<float>(v)); };
    for (auto& t : model.tensors()) {
        for (double& v : t.data()) v = round(v);
    }
    for (auto* buffers : {&optimizer.first_moment, &optimizer.second_moment}) {
        for (auto& b : *buffers) {
            for (double& v : b) v = round(v);
        }
    }
}

namespace {

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, const NetworkParams& model, const TrainState& state) {
    auto records = params_to_records(model);
    const auto named = model.named();
    if (!state.optimizer.first_moment.empty()) {
        for (std::size_t i = 0; i < named.size(); ++i) {
            records.push_back({"adam.m." + named[i].first, named[i].second.shape(), state.optimizer.first_moment[i]});
            records.push_back({"adam.v." + named[i].first, named[i].second.shape(), state.optimizer.second_moment[i]});
        }
    }
    auto dsw = stem;
    dsw += ".dsw";
    write_dsw(dsw, records);

    nlohmann::json j;
    j["format"] = "deepsep-checkpoint-1";
    j["epochs_done"] = state.epochs_done;
    j["optimizer"] = {{"step", state.optimizer.step},
                      {"lr", state.optimizer.config.lr},
                      {"beta1", state.optimizer.config.beta1},
                      {"beta2", state.optimizer.config.beta2},
                      {"eps", state.optimizer.config.eps},
                      {"has_moments", !state.optimizer.first_moment.empty()}};
    auto log = nlohmann::json::array();
    for (const auto& r : state.log.epochs) {
        log.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"validation_loss", number_or_null(r.validation_loss)},
                       {"case_loss", r.case_loss},
                       {"case_count", r.case_count}});
    }
    j["log"] = std::move(log);
    auto json_path = stem;
    json_path += ".json";
    std::ofstream out(json_path);
    if (!out) throw FormatError(FormatErrorKind::Io, "cannot write " + json_path.string());
    out << j.dump(2) << '\n';
}

std::pair<NetworkParams, TrainState> load_checkpoint(const std::filesystem::path& stem) {
    auto dsw = stem;
    dsw += ".dsw";
    auto json_path = stem;
    json_path += ".json";
    const auto records = read_dsw(dsw);
    NetworkParams model = params_from_records(records, infer_arch(records));

    std::ifstream in(json_path);
    if (!in) throw FormatError(FormatErrorKind::Io, "cannot open " + json_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatErrorKind::Invalid, json_path.string() + ": " + e.what());
    }
    TrainState st;
    try {
        st.epochs_done = j.at("epochs_done").get<std::size_t>();
        const auto& o = j.at("optimizer");
        st.optimizer.step = o.at("step").get<std::uint64_t>();
        st.optimizer.config = {o.at("lr").get<double>(), o.at("beta1").get<double>(), o.at("beta2").get<double>(),
                               o.at("eps").get<double>()};
        if (o.at("has_moments").get<bool>()) {
            std::map<std::string, const NamedArray*> by_name;
            for (const auto& r : records) by_name[r.name] = &r;
            for (const auto& [name, t] : model.named()) {
                for (auto* target : {&st.optimizer.first_moment, &st.optimizer.second_moment}) {
                    const std::string key = (target == &st.optimizer.first_moment ? "adam.m." : "adam.v.") + name;
                    const auto it = by_name.find(key);
                    if (it == by_name.end()) {
                        throw FormatError(FormatErrorKind::MissingRecord, "checkpoint lacks record " + key);
                    }
                    if (it->second->shape != t.shape()) {
                        throw FormatError(FormatErrorKind::ShapeMismatch, "checkpoint record " + key + " has wrong shape");
                    }
                    target->push_back(it->second->values);
                }
            }
        }
        for (const auto& r : j.at("log")) {
            EpochRecord e;
            e.epoch = r.at("epoch").get<std::size_t>();
            e.train_loss = r.at("train_loss").get<double>();
            e.validation_loss =
                r.at("validation_loss").is_null() ? std::numeric_limits<double>::quiet_NaN() : r.at("validation_loss").get<double>();
            e.case_loss = r.at("case_loss").get<std::array<double, 3>>();
            e.case_count = r.at("case_count").get<std::array<std::size_t, 3>>();
            st.log.epochs.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatErrorKind::Invalid, json_path.string() + ": " + e.what());
    }
    return {std::move(model), std::move(st)};
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError(FormatErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    return out;
}

}  // namespace

void TrainLog::write_csv(const std::filesystem::path& path) const {
    auto out = open_csv(path);
    out << "epoch,train_loss,validation_loss,case1_loss,case2_loss,case3_loss,case1_count,case2_count,case3_count\n";
    for (const auto& r : epochs) {
        out << r.epoch << ',' << r.train_loss << ',';
        if (std::isfinite(r.validation_loss)) out << r.validation_loss;
        out << ',' << r.case_loss[0] << ',' << r.case_loss[1] << ',' << r.case_loss[2] << ',' << r.case_count[0]
            << ',' << r.case_count[1] << ',' << r.case_count[2] << '\n';
    }
}

void TrainLog::write_timing_csv(const std::filesystem::path& path) const {
    auto out = open_csv(path);
    out << "epoch,wall_seconds\n";
    for (const auto& r : epochs) out << r.epoch << ',' << r.wall_seconds << '\n';
}

}  // namespace deepsep
