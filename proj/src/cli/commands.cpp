#include "deepsep/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "deepsep/datagen.hpp"
#include "deepsep/erp.hpp"
#include "deepsep/metrics.hpp"
#include "deepsep/model.hpp"
#include "deepsep/svg.hpp"
#include "deepsep/trainer.hpp"

namespace deepsep {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "1.0.0";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> g_argv;

json run_config(const std::string& command, json options) {
    json j;
    j["tool"] = "deepsep";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["argv"] = g_argv;
    j["options"] = std::move(options);
    j["formats"] = {{"segments", "ESG1"}, {"weights", "DSW1"}, {"checkpoint", "deepsep-checkpoint-1"}};
    return j;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError(FormatErrorKind::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatErrorKind::Io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(FormatErrorKind::Invalid, path.string() + ": " + e.what());
    }
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw FormatError(FormatErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

/// Writes sibling "<file>.run_config.json" for single-file outputs.
fs::path sidecar_path(const fs::path& file) { return fs::path(file.string() + ".run_config.json"); }

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<std::string>& labels, const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw FormatError(FormatErrorKind::Io, "cannot write " + path.string());
    out << std::setprecision(12);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    if (!header.empty()) out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        bool first = true;
        if (r < labels.size()) {
            out << labels[r];
            first = false;
        }
        for (double v : rows[r]) {
            if (!first) out << ',';
            out << v;
            first = false;
        }
        out << '\n';
    }
}

// ---- data directories ------------------------------------------------------

struct Dataset {
    fs::path dir;
    SegmentKind artifact_kind = SegmentKind::EOG;
    std::vector<MixedSample> samples;
    std::vector<Segment> clean_pool;
    std::vector<Segment> artifact_pool;
};

Dataset load_dataset(const fs::path& dir) {
    Dataset d;
    d.dir = dir;
    const auto manifest = read_json_file(dir / "manifest.json");
    const auto mixed = load_rows(dir / "mixed.esg");
    const auto clean = load_rows(dir / "clean.esg");
    const auto artifact = load_rows(dir / "artifact.esg");
    if (mixed.size() != clean.size() || mixed.size() != artifact.size()) {
        throw FormatError(FormatErrorKind::Invalid, dir.string() + ": mixed, clean and artifact counts differ");
    }
    try {
        d.artifact_kind = parse_segment_kind(manifest.at("artifact_kind").get<std::string>());
        const auto& entries = manifest.at("samples");
        if (entries.size() != mixed.size()) {
            throw FormatError(FormatErrorKind::Invalid, dir.string() + ": manifest lists " +
                                                            std::to_string(entries.size()) + " samples, files hold " +
                                                            std::to_string(mixed.size()));
        }
        for (std::size_t i = 0; i < mixed.size(); ++i) {
            const auto& e = entries[i];
            MixedSample s;
            s.y = mixed[i];
            s.x = clean[i];
            s.lambda = e.at("lambda").get<double>();
            s.snr_db = e.at("snr_db").get<double>();
            s.eeg_index = e.at("eeg_index").get<std::size_t>();
            s.artifact_index = e.at("artifact_index").get<std::size_t>();
            if (!(s.lambda > 0.0)) throw FormatError(FormatErrorKind::Invalid, "non-positive lambda in manifest");
            s.n.resize(artifact[i].size());
            for (std::size_t t = 0; t < s.n.size(); ++t) s.n[t] = artifact[i][t] / s.lambda;
            d.samples.push_back(std::move(s));
            d.clean_pool.push_back({clean[i], SegmentKind::CleanEEG, i});
            d.artifact_pool.push_back({artifact[i], d.artifact_kind, i});
        }
    } catch (const json::exception& e) {
        throw FormatError(FormatErrorKind::Invalid, (dir / "manifest.json").string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(FormatErrorKind::Invalid, (dir / "manifest.json").string() + ": " + e.what());
    }
    return d;
}

std::vector<std::size_t> read_events(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatErrorKind::Io, "cannot open " + path.string());
    std::vector<std::size_t> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::string token;
        while (fields >> token) {
            std::size_t used = 0;
            long long v = -1;
            try {
                v = std::stoll(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != token.size() || v < 0) {
                throw FormatError(FormatErrorKind::Invalid, path.string() + ":" + std::to_string(line_no) +
                                                                ": not a sample index: '" + token + "'");
            }
            events.push_back(static_cast<std::size_t>(v));
        }
    }
    return events;
}

/// Parses a command-line value, reporting rejection as a usage error.
template <typename F>
auto flag_value(F&& parse) -> decltype(parse()) {
    try {
        return parse();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

std::vector<double> pick_row(const fs::path& input, std::size_t row) {
    auto rows = load_rows(input);
    if (row >= rows.size()) {
        throw UsageError("--row " + std::to_string(row) + " out of range: " + input.string() + " holds " +
                         std::to_string(rows.size()) + " rows");
    }
    return std::move(rows[row]);
}

// ---- commands --------------------------------------------------------------

struct MakePoolsArgs {
    std::vector<std::string> kinds{"eeg", "eog", "emg"};
    std::size_t count = 1000;
    std::size_t length = 512;
    double fs = kDefaultSamplingRate;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_make_pools(const MakePoolsArgs& a) {
    make_dir(a.out);
    SurrogateConfig cfg{a.length, a.fs};
    json pools = json::object();
    for (const auto& name : a.kinds) {
        const auto kind = flag_value([&] { return parse_segment_kind(name); });
        const auto pool = make_surrogate_pool(kind, a.count, a.seed, cfg);
        save_segments(fs::path(a.out) / (std::string(segment_kind_name(kind)) + ".esg"), pool);
        pools[segment_kind_name(kind)] = a.count;
    }
    write_json_file(fs::path(a.out) / "manifest.json",
                    {{"format", "deepsep-pools-1"},
                     {"length", a.length},
                     {"sampling_rate", a.fs},
                     {"seed", a.seed},
                     {"pools", pools}});
    write_json_file(fs::path(a.out) / "run_config.json",
                    run_config("make-pools", {{"kinds", a.kinds},
                                              {"count", a.count},
                                              {"length", a.length},
                                              {"fs", a.fs},
                                              {"seed", a.seed},
                                              {"out", a.out}}));
    return kExitOk;
}

struct SynthArgs {
    std::string eeg;
    std::string artifact;
    std::string artifact_kind = "eog";
    std::size_t count = 0;
    double snr_min = -7.0;
    double snr_max = 2.0;
    std::vector<double> snr_levels;
    std::size_t per_level = 0;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    if (a.snr_min > a.snr_max) throw UsageError("--snr-min must not exceed --snr-max");
    if (!a.snr_levels.empty() && a.per_level == 0) throw UsageError("--snr-levels needs --per-level");
    const auto kind = flag_value([&] { return parse_segment_kind(a.artifact_kind); });
    if (kind == SegmentKind::CleanEEG) throw UsageError("--artifact-kind must be eog or emg");
    const auto eeg = load_segments(a.eeg, SegmentKind::CleanEEG);
    const auto art = load_segments(a.artifact, kind);
    const bool sweep = !a.snr_levels.empty();
    const std::size_t wanted = sweep ? a.snr_levels.size() * a.per_level : a.count;
    if (wanted > 0 && (eeg.empty() || art.empty())) {
        throw FormatError(FormatErrorKind::Invalid, "segment pools must be nonempty");
    }
    const auto samples = sweep ? synthesize_at_levels(eeg, art, a.snr_levels, a.per_level, a.seed)
                               : synthesize(eeg, art, {a.snr_min, a.snr_max}, a.count, a.seed);

    std::vector<std::vector<double>> y, x, ln;
    json entries = json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        y.push_back(s.y);
        x.push_back(s.x);
        ln.push_back(s.scaled_artifact());
        entries.push_back({{"index", i},
                           {"eeg_index", s.eeg_index},
                           {"artifact_index", s.artifact_index},
                           {"lambda", s.lambda},
                           {"snr_db", s.snr_db}});
    }
    const fs::path out(a.out);
    make_dir(out);
    save_rows(out / "mixed.esg", y);
    save_rows(out / "clean.esg", x);
    save_rows(out / "artifact.esg", ln);
    json manifest{{"format", "deepsep-synth-1"},
                  {"count", samples.size()},
                  {"length", samples.empty() ? 0 : samples.front().y.size()},
                  {"artifact_kind", segment_kind_name(kind)},
                  {"seed", a.seed},
                  {"snr_min", sweep ? *std::min_element(a.snr_levels.begin(), a.snr_levels.end()) : a.snr_min},
                  {"snr_max", sweep ? *std::max_element(a.snr_levels.begin(), a.snr_levels.end()) : a.snr_max},
                  {"samples", entries}};
    write_json_file(out / "manifest.json", manifest);
    write_json_file(out / "run_config.json", run_config("synth", {{"eeg", a.eeg},
                                                                 {"artifact", a.artifact},
                                                                 {"artifact_kind", a.artifact_kind},
                                                                 {"count", a.count},
                                                                 {"snr_min", a.snr_min},
                                                                 {"snr_max", a.snr_max},
                                                                 {"snr_levels", a.snr_levels},
                                                                 {"per_level", a.per_level},
                                                                 {"seed", a.seed},
                                                                 {"out", a.out}}));
    std::cout << "wrote " << samples.size() << " samples to " << out.string() << '\n';
    return kExitOk;
}

struct TrainArgs {
    std::vector<std::string> data;
    std::size_t epochs = 50;
    std::size_t batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::string ratios = "0.8,0.1,0.1";
    std::string out;
    std::string resume;
    std::size_t checkpoint_every = 0;
    double validation = 0.1;
    std::size_t branch_channels = 8;
    std::string artifact_filter;
    bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
    const auto ratios = flag_value([&] { return parse_ratios(a.ratios); });
    std::optional<SegmentKind> filter;
    if (!a.artifact_filter.empty()) filter = flag_value([&] { return parse_segment_kind(a.artifact_filter); });

    std::vector<TrainingCase> cases;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const auto d = load_dataset(a.data[k]);
        if (filter && d.artifact_kind != *filter) continue;
        auto part = make_training_cases(d.samples, d.clean_pool, d.artifact_pool, ratios,
                                        a.seed + 0x9E3779B97F4A7C15ULL * k);
        cases.insert(cases.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    if (cases.empty()) throw FormatError(FormatErrorKind::Invalid, "no training samples after filtering");

    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.batch = a.batch;
    cfg.lr = a.lr;
    cfg.seed = a.seed;
    cfg.validation_fraction = a.validation;
    cfg.checkpoint_interval = a.checkpoint_every;
    cfg.checkpoint_dir = fs::path(a.out) / "checkpoints";
    cfg.verbose = !a.quiet;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    NetworkParams model;
    TrainState state;
    if (!a.resume.empty()) {
        std::tie(model, state) = load_checkpoint(a.resume);
        if (state.epochs_done >= cfg.epochs) {
            throw UsageError("checkpoint already covers " + std::to_string(state.epochs_done) + " epochs");
        }
    } else {
        ArchConfig arch;
        arch.branch_channels = a.branch_channels;
        try {
            arch.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        model = init_weights(arch, a.seed);
    }

    const fs::path out(a.out);
    make_dir(out);
    write_json_file(out / "run_config.json", run_config("train", {{"data", a.data},
                                                                 {"epochs", a.epochs},
                                                                 {"batch", a.batch},
                                                                 {"lr", a.lr},
                                                                 {"seed", a.seed},
                                                                 {"ratios", ratios.weights},
                                                                 {"resume", a.resume},
                                                                 {"checkpoint_every", a.checkpoint_every},
                                                                 {"validation", a.validation},
                                                                 {"branch_channels", model.arch.branch_channels},
                                                                 {"artifact_filter", a.artifact_filter},
                                                                 {"cases", cases.size()},
                                                                 {"out", a.out}}));
    const auto log = train(model, cases, cfg, &state);
    save_weights(model, out / "model.dsw");
    log.write_csv(out / "trainlog.csv");
    log.write_timing_csv(out / "timing.csv");
    if (!log.epochs.empty()) {
        std::cout << "trained " << log.epochs.size() << " epochs, final loss " << log.epochs.back().train_loss
                  << '\n';
    }
    return kExitOk;
}

struct DenoiseArgs {
    std::string model;
    std::string input;
    std::string mode = "signal";
    std::string out;
};

int cmd_denoise(const DenoiseArgs& a) {
    const auto mode = flag_value([&] { return parse_indicator(a.mode); });
    const auto model = load_weights(a.model);
    const auto channels = load_rows(a.input);
    if (!channels.empty() && channels.front().empty()) {
        throw ShapeError(a.input + ": channels hold no samples");
    }
    std::vector<std::vector<double>> result(channels.size());
    parallel_for(channels.size(), worker_threads_from_env(),
                 [&](std::size_t c) { result[c] = separate(model, channels[c], mode); });
    const fs::path out(a.out);
    if (out.has_parent_path()) make_dir(out.parent_path());
    save_rows(out, result);
    write_json_file(sidecar_path(out), run_config("denoise", {{"model", a.model},
                                                             {"input", a.input},
                                                             {"mode", indicator_name(mode)},
                                                             {"channels", channels.size()},
                                                             {"out", a.out}}));
    return kExitOk;
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::vector<std::string> methods{"deepsep", "lms", "identity"};
    bool per_snr = false;
    int snr_min = -7;
    int snr_max = 2;
    double fs = kDefaultSamplingRate;
    std::size_t welch_segment = 256;
    bool svg = false;
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    for (const auto& m : a.methods) {
        if (m != "deepsep" && m != "lms" && m != "identity") {
            throw UsageError("unknown method '" + m + "' (expected deepsep, lms or identity)");
        }
    }
    const bool needs_model = std::find(a.methods.begin(), a.methods.end(), "deepsep") != a.methods.end();
    if (needs_model && a.model.empty()) throw UsageError("method deepsep needs --model");
    if (a.snr_min > a.snr_max) throw UsageError("--snr-min must not exceed --snr-max");
    if (a.welch_segment < 2) throw UsageError("--welch-segment must be at least 2");

    const auto d = load_dataset(a.data);
    std::optional<NetworkParams> model;
    if (needs_model) model = load_weights(a.model);

    EvalOptions opts;
    opts.sampling_rate = a.fs;
    opts.welch = {a.welch_segment, a.welch_segment / 2};
    opts.threads = worker_threads_from_env();
    if (a.per_snr) opts.snr_levels = std::make_pair(a.snr_min, a.snr_max);

    const fs::path out(a.out);
    make_dir(out);
    json combined = json::object();
    std::vector<LineSeries> curves;
    std::cout << std::left << std::setw(10) << "method" << std::setw(14) << "rrmse_t" << std::setw(14) << "rrmse_s"
              << "cc\n";
    for (const auto& m : a.methods) {
        Denoiser method = m == "deepsep" ? deepsep_denoiser(*model) : m == "lms" ? lms_denoiser() : identity_denoiser();
        const auto report = evaluate(method, d.samples, m, segment_kind_name(d.artifact_kind), opts);
        const auto dir = out / m;
        make_dir(dir);
        report.write_samples_csv(dir / "samples.csv");
        report.write_json(dir / "summary.json");
        if (a.per_snr) {
            report.write_per_snr_csv(dir / "per_snr.csv");
            LineSeries s{m, {}, {}};
            for (const auto& b : report.per_snr) {
                s.x.push_back(b.snr_db);
                s.y.push_back(b.summary.n ? b.summary.cc_mean : std::nan(""));
            }
            curves.push_back(std::move(s));
        }
        auto overall = json::parse(report.to_json());
        overall.erase("per_snr");
        combined[m] = std::move(overall);
        std::cout << std::left << std::setw(10) << m << std::setw(14) << report.overall.rrmse_t_mean
                  << std::setw(14) << report.overall.rrmse_s_mean << report.overall.cc_mean << '\n';
    }
    write_json_file(out / "summary.json", combined);
    if (a.svg && a.per_snr) {
        write_line_plot_svg(out / "per_snr_cc.svg", curves, "mean CC per SNR", "SNR (dB)", "CC");
    }
    write_json_file(out / "run_config.json", run_config("eval", {{"model", a.model},
                                                                {"data", a.data},
                                                                {"methods", a.methods},
                                                                {"per_snr", a.per_snr},
                                                                {"snr_min", a.snr_min},
                                                                {"snr_max", a.snr_max},
                                                                {"fs", a.fs},
                                                                {"welch_segment", a.welch_segment},
                                                                {"svg", a.svg},
                                                                {"out", a.out}}));
    return kExitOk;
}

struct ErpArgs {
    std::string input;
    std::string events;
    double pre_ms = 100.0;
    double post_ms = 400.0;
    double fs = kDefaultSamplingRate;
    bool svg = false;
    std::string out;
};

int cmd_erp(const ErpArgs& a) {
    const auto window = flag_value([&] { return erp_window(a.pre_ms, a.post_ms, a.fs); });
    const auto channels = load_rows(a.input);
    const auto events = read_events(a.events);
    const auto erp = epoch_average(channels, events, window);

    std::vector<std::string> header{"channel"};
    std::vector<double> times;
    for (std::size_t j = 0; j < window.length(); ++j) {
        const double t_ms = (static_cast<double>(j) - static_cast<double>(window.pre)) * 1000.0 / a.fs;
        times.push_back(t_ms);
        std::ostringstream s;
        s << std::setprecision(10) << t_ms;
        header.push_back(s.str());
    }
    const fs::path out(a.out);
    if (out.has_parent_path()) make_dir(out.parent_path());
    write_matrix_csv(out, header, numbered("ch", erp.size()), erp);
    if (a.svg) {
        std::vector<LineSeries> series;
        for (std::size_t c = 0; c < erp.size(); ++c) series.push_back({"ch" + std::to_string(c), times, erp[c]});
        write_line_plot_svg(fs::path(a.out + ".svg"), series, "ERP", "time (ms)", "amplitude");
    }
    write_json_file(sidecar_path(out), run_config("erp", {{"input", a.input},
                                                         {"events", a.events},
                                                         {"pre_ms", a.pre_ms},
                                                         {"post_ms", a.post_ms},
                                                         {"fs", a.fs},
                                                         {"pre_samples", window.pre},
                                                         {"post_samples", window.post},
                                                         {"epochs", events.size()},
                                                         {"out", a.out}}));
    return kExitOk;
}

struct GradcheckArgs {
    std::string model;
    std::uint64_t seed = 0;
    std::size_t length = 32;
    std::size_t branch_channels = 2;
    double tolerance = 1e-4;
    double step = 1e-5;
    double floor = 1e-8;
    std::string out;
    bool verbose = false;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    NetworkParams model;
    if (!a.model.empty()) {
        model = load_weights(a.model);
    } else {
        ArchConfig arch;
        arch.branch_channels = a.branch_channels;
        try {
            arch.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        model = init_weights(arch, a.seed);
    }
    if (a.length == 0) throw UsageError("--length must be positive");

    const auto cases = gradcheck_cases(a.seed, a.length);

    GradcheckOptions opts{a.step, a.floor, a.tolerance};
    bool ok = true;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    for (const auto& c : cases) {
        const auto report = gradcheck(model, c, opts);
        const bool passed = report.passed(a.tolerance);
        ok = ok && passed;
        std::cout << "case " << static_cast<int>(c.kind) << " (" << indicator_name(c.indicator)
                  << "): max rel " << report.max_rel_error << ", mean rel " << report.mean_rel_error
                  << ", max abs " << report.max_abs_error << ", floored " << report.floored << ", kinked " << report.kinked << " of " << report.elements
                  << "  "
                  << (passed ? "ok" : "FAIL") << '\n';
        for (const auto& e : report.entries) {
            if (a.verbose) {
                std::cout << "  " << std::left << std::setw(34) << e.name << " max rel " << e.max_rel_error
                          << "  floored " << e.floored << "  kinked " << e.kinked << " of " << e.elements << '\n';
            }
            labels.push_back(std::to_string(static_cast<int>(c.kind)) + "," + e.name);
            rows.push_back({static_cast<double>(e.elements), static_cast<double>(e.floored),
                            static_cast<double>(e.kinked), e.max_rel_error,
                            e.mean_rel_error, e.max_abs_error});
        }
    }
    if (!a.out.empty()) {
        write_matrix_csv(a.out, {"case", "parameter", "elements", "floored", "kinked", "max_rel", "mean_rel", "max_abs"}, labels,
                         rows);
    }
    return ok ? kExitOk : kExitNumerical;
}

struct SpectrogramArgs {
    std::string input;
    std::size_t row = 0;
    double fs = kDefaultSamplingRate;
    std::size_t window = 64;
    std::size_t hop = 32;
    bool svg = false;
    std::string out;
};

int cmd_spectrogram(const SpectrogramArgs& a) {
    const auto x = pick_row(a.input, a.row);
    const auto spec = spectrogram(x, a.fs, a.window, a.hop);
    std::vector<std::string> header{"freq_hz"};
    for (double t : spec.times) {
        std::ostringstream s;
        s << std::setprecision(10) << t;
        header.push_back(s.str());
    }
    std::vector<std::string> labels;
    for (double f : spec.freqs) {
        std::ostringstream s;
        s << std::setprecision(10) << f;
        labels.push_back(s.str());
    }
    const fs::path out(a.out);
    if (out.has_parent_path()) make_dir(out.parent_path());
    write_matrix_csv(out, header, labels, spec.magnitude);
    if (a.svg) write_heatmap_svg(fs::path(a.out + ".svg"), spec.magnitude, "spectrogram");
    write_json_file(sidecar_path(out), run_config("spectrogram", {{"input", a.input},
                                                                 {"row", a.row},
                                                                 {"fs", a.fs},
                                                                 {"window", a.window},
                                                                 {"hop", a.hop},
                                                                 {"out", a.out}}));
    return kExitOk;
}

struct DumpLatentArgs {
    std::string model;
    std::string input;
    std::size_t row = 0;
    std::string mode = "signal";
    std::string out;
};

int cmd_dump_latent(const DumpLatentArgs& a) {
    const auto mode = flag_value([&] { return parse_indicator(a.mode); });
    const auto model = load_weights(a.model);
    auto x = pick_row(a.input, a.row);
    if (x.empty()) throw ShapeError(a.input + ": row holds no samples");
    const double s = segment_scale(x);
    for (double& v : x) v /= s;
    const std::size_t len = x.size();
    Tape tape = Tape::inference();
    const auto r = forward(tape, Tensor::from({1, 1, len}, std::move(x)), model, mode);

    auto rows_of = [len](const Tensor& t) {
        const std::size_t channels = t.dim(1);
        std::vector<std::vector<double>> rows(channels);
        const auto& v = t.values();
        for (std::size_t c = 0; c < channels; ++c) {
            rows[c].assign(v.begin() + static_cast<std::ptrdiff_t>(c * len),
                           v.begin() + static_cast<std::ptrdiff_t>((c + 1) * len));
        }
        return rows;
    };
    const fs::path out(a.out);
    make_dir(out);
    write_matrix_csv(out / "z.csv", {}, {}, rows_of(r.embedding));
    write_matrix_csv(out / "v_atte.csv", {}, {}, rows_of(r.attenuation));
    write_matrix_csv(out / "z_tilde.csv", {}, {}, rows_of(r.attenuated));
    write_json_file(out / "run_config.json", run_config("dump-latent", {{"model", a.model},
                                                                       {"input", a.input},
                                                                       {"row", a.row},
                                                                       {"mode", indicator_name(mode)},
                                                                       {"scale", s},
                                                                       {"embed_channels", model.arch.embed_channels()},
                                                                       {"out", a.out}}));
    return kExitOk;
}

int report(const char* kind, const std::exception& e, int code) {
    std::cerr << "deepsep: " << kind << ": " << e.what() << '\n';
    return code;
}

}  // namespace

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

int run_cli(const std::vector<std::string>& args) {
    g_argv = args;
    CLI::App app{"EEG artifact separation: synthesis, training, denoising and evaluation", "deepsep"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    std::function<int()> action;

    MakePoolsArgs pools;
    auto* p = app.add_subcommand("make-pools", "Generate surrogate clean-EEG, EOG and EMG segment pools");
    p->add_option("--kind", pools.kinds, "Pools to generate (eeg, eog, emg)")->delimiter(',');
    p->add_option("--count", pools.count, "Segments per pool");
    p->add_option("--length", pools.length, "Samples per segment")->check(CLI::PositiveNumber);
    p->add_option("--fs", pools.fs, "Sampling rate in Hz")->check(CLI::PositiveNumber);
    p->add_option("--seed", pools.seed);
    p->add_option("--out", pools.out, "Output directory")->required();
    p->callback([&] { action = [&] { return cmd_make_pools(pools); }; });

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Mix clean EEG with scaled artifacts at controlled SNR");
    s->add_option("--eeg", synth.eeg, "Clean EEG segments (ESG1)")->required();
    s->add_option("--artifact", synth.artifact, "Artifact segments (ESG1)")->required();
    s->add_option("--artifact-kind", synth.artifact_kind, "eog or emg");
    s->add_option("--count", synth.count, "Number of mixed samples");
    s->add_option("--snr-min", synth.snr_min, "Lowest SNR in dB");
    s->add_option("--snr-max", synth.snr_max, "Highest SNR in dB");
    s->add_option("--snr-levels", synth.snr_levels, "Fixed SNR levels in dB, comma separated")->delimiter(',');
    s->add_option("--per-level", synth.per_level, "Samples per fixed SNR level");
    s->add_option("--seed", synth.seed);
    s->add_option("--out", synth.out, "Output directory")->required();
    s->callback([&] { action = [&] { return cmd_synth(synth); }; });

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train the separation network");
    t->add_option("--data", tr.data, "Directories written by synth")->required()->delimiter(',');
    t->add_option("--epochs", tr.epochs);
    t->add_option("--batch", tr.batch);
    t->add_option("--lr", tr.lr);
    t->add_option("--seed", tr.seed);
    t->add_option("--ratios", tr.ratios, "Case 1/2/3 mixing weights, e.g. 0.8,0.1,0.1");
    t->add_option("--out", tr.out, "Output directory")->required();
    t->add_option("--resume", tr.resume, "Checkpoint stem to resume from (without extension)");
    t->add_option("--checkpoint-every", tr.checkpoint_every, "Epochs between checkpoints (0 disables)");
    t->add_option("--validation", tr.validation, "Held-out fraction for validation loss");
    t->add_option("--branch-channels", tr.branch_channels, "Channels per inception branch");
    t->add_option("--artifact-filter", tr.artifact_filter, "Only use data directories of this artifact kind");
    t->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");
    t->callback([&] { action = [&] { return cmd_train(tr); }; });

    DenoiseArgs dn;
    auto* d = app.add_subcommand("denoise", "Denoise each channel (row) of an ESG1 file");
    d->add_option("--model", dn.model)->required();
    d->add_option("--input", dn.input)->required();
    d->add_option("--mode", dn.mode, "signal or artifact");
    d->add_option("--out", dn.out, "Output ESG1 file")->required();
    d->callback([&] { action = [&] { return cmd_denoise(dn); }; });

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Score denoising methods on a synthesized test set");
    e->add_option("--model", ev.model);
    e->add_option("--data", ev.data, "Directory written by synth")->required();
    e->add_option("--methods", ev.methods, "deepsep, lms, identity")->delimiter(',');
    e->add_flag("--per-snr", ev.per_snr, "Also report per-integer-SNR buckets");
    e->add_option("--snr-min", ev.snr_min, "Lowest SNR bucket");
    e->add_option("--snr-max", ev.snr_max, "Highest SNR bucket");
    e->add_option("--fs", ev.fs)->check(CLI::PositiveNumber);
    e->add_option("--welch-segment", ev.welch_segment, "Welch window length for rrmse_s");
    e->add_flag("--svg", ev.svg, "Render the per-SNR CC curves as SVG");
    e->add_option("--out", ev.out, "Output directory")->required();
    e->callback([&] { action = [&] { return cmd_eval(ev); }; });

    ErpArgs erp;
    auto* r = app.add_subcommand(
        "erp",
        "Event-locked average per channel. Offsets convert to samples with floor: pre = floor(pre_ms * fs / 1000), "
        "post = floor(post_ms * fs / 1000); each epoch spans pre + 1 + post samples including the event sample");
    r->add_option("--input", erp.input, "Channels as ESG1 rows")->required();
    r->add_option("--events", erp.events, "Text file of event sample indices")->required();
    r->add_option("--pre", erp.pre_ms, "Milliseconds before the event");
    r->add_option("--post", erp.post_ms, "Milliseconds after the event");
    r->add_option("--fs", erp.fs)->check(CLI::PositiveNumber);
    r->add_flag("--svg", erp.svg);
    r->add_option("--out", erp.out, "Output CSV")->required();
    r->callback([&] { action = [&] { return cmd_erp(erp); }; });

    GradcheckArgs gc;
    auto* g = app.add_subcommand("gradcheck", "Compare backprop gradients with central differences");
    g->add_option("--model", gc.model, "Weights to check (default: fresh tiny network)");
    g->add_option("--seed", gc.seed);
    g->add_option("--length", gc.length);
    g->add_option("--branch-channels", gc.branch_channels);
    g->add_option("--tolerance", gc.tolerance);
    g->add_option("--step", gc.step);
    g->add_option("--floor", gc.floor, "Absolute error at or below this is excluded");
    g->add_option("--out", gc.out, "Per-parameter CSV");
    g->add_flag("--verbose", gc.verbose);
    g->callback([&] { action = [&] { return cmd_gradcheck(gc); }; });

    SpectrogramArgs sp;
    auto* sg = app.add_subcommand("spectrogram", "STFT magnitude of one segment as CSV");
    sg->add_option("--input", sp.input)->required();
    sg->add_option("--row", sp.row);
    sg->add_option("--fs", sp.fs)->check(CLI::PositiveNumber);
    sg->add_option("--window", sp.window);
    sg->add_option("--hop", sp.hop);
    sg->add_flag("--svg", sp.svg);
    sg->add_option("--out", sp.out, "Output CSV")->required();
    sg->callback([&] { action = [&] { return cmd_spectrogram(sp); }; });

    DumpLatentArgs dl;
    auto* l = app.add_subcommand("dump-latent", "Write z, v_atte and z~ for one segment");
    l->add_option("--model", dl.model)->required();
    l->add_option("--input", dl.input)->required();
    l->add_option("--row", dl.row);
    l->add_option("--mode", dl.mode, "signal or artifact");
    l->add_option("--out", dl.out, "Output directory")->required();
    l->callback([&] { action = [&] { return cmd_dump_latent(dl); }; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        return action();
    } catch (const UsageError& err) {
        return report("usage", err, kExitUsage);
    } catch (const FormatError& err) {
        return report(format_error_kind_name(err.kind()), err, kExitData);
    } catch (const EpochOutOfRange& err) {
        return report("epoch out of range", err, kExitData);
    } catch (const NumericalError& err) {
        return report("numerical failure", err, kExitNumerical);
    } catch (const ShapeError& err) {
        return report("shape", err, kExitData);
    } catch (const std::invalid_argument& err) {
        return report("invalid input", err, kExitData);
    } catch (const std::exception& err) {
        return report("error", err, kExitData);
    }
}

}  // namespace deepsep
