#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "deepsep/datagen.hpp"

namespace deepsep {

const char* segment_kind_name(SegmentKind kind) {
    switch (kind) {
        case SegmentKind::CleanEEG: return "eeg";
        case SegmentKind::EOG: return "eog";
        case SegmentKind::EMG: return "emg";
    }
    return "?";
}

SegmentKind parse_segment_kind(const std::string& text) {
    if (text == "eeg") return SegmentKind::CleanEEG;
    if (text == "eog") return SegmentKind::EOG;
    if (text == "emg") return SegmentKind::EMG;
    throw std::invalid_argument("unknown segment kind '" + text + "' (expected eeg|eog|emg)");
}

void MixRatios::validate() const {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("mix ratios must be finite and >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("mix ratios must sum to 1, got " + std::to_string(sum));
    }
}

MixRatios parse_ratios(const std::string& text) {
    MixRatios r;
    std::stringstream ss(text);
    std::string item;
    std::size_t i = 0;
    while (std::getline(ss, item, ',')) {
        if (i >= 3) throw std::invalid_argument("ratios need exactly three values: " + text);
        std::size_t used = 0;
        r.weights[i++] = std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument("bad ratio value '" + item + "'");
    }
    if (i != 3) throw std::invalid_argument("ratios need exactly three values: " + text);
    r.validate();
    return r;
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

std::vector<double> MixedSample::scaled_artifact() const {
    std::vector<double> out(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) out[i] = lambda * n[i];
    return out;
}

double rms(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("rms of an empty signal");
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
}

double snr_db(std::span<const double> x, std::span<const double> noise) {
    return 10.0 * std::log10(rms(x) / rms(noise));
}

double lambda_for_snr(std::span<const double> x, std::span<const double> n, double snr) {
    const double rn = rms(n);
    if (!(rn > 0.0)) throw std::invalid_argument("artifact segment has zero RMS; cannot set SNR");
    return rms(x) / (rn * std::pow(10.0, snr / 10.0));
}

MixedSample mix(const Segment& eeg, const Segment& artifact, double snr) {
    if (eeg.samples.size() != artifact.samples.size()) {
        throw std::invalid_argument("mix: clean and artifact segments differ in length");
    }
    MixedSample s;
    s.x = eeg.samples;
    s.n = artifact.samples;
    s.lambda = lambda_for_snr(s.x, s.n, snr);
    s.snr_db = snr;
    s.eeg_index = eeg.source_index;
    s.artifact_index = artifact.source_index;
    s.y.resize(s.x.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) s.y[i] = s.x[i] + s.lambda * s.n[i];
    return s;
}

namespace {

void require_pools(std::span<const Segment> eeg_pool, std::span<const Segment> artifact_pool) {
    if (eeg_pool.empty()) throw std::invalid_argument("clean EEG pool is empty");
    if (artifact_pool.empty()) throw std::invalid_argument("artifact pool is empty");
}

MixedSample draw_pair(std::mt19937_64& rng, std::span<const Segment> eeg_pool,
                      std::span<const Segment> artifact_pool, double snr) {
    std::uniform_int_distribution<std::size_t> pick_eeg(0, eeg_pool.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_art(0, artifact_pool.size() - 1);
    const auto& e = eeg_pool[pick_eeg(rng)];
    const auto& a = artifact_pool[pick_art(rng)];
    return mix(e, a, snr);
}

}  // namespace

std::vector<MixedSample> synthesize(std::span<const Segment> eeg_pool, std::span<const Segment> artifact_pool,
                                    SnrRange range, std::size_t count, std::uint64_t seed) {
    if (count == 0) return {};
    require_pools(eeg_pool, artifact_pool);
    if (!(range.min_db <= range.max_db)) throw std::invalid_argument("SNR range is empty");
    std::vector<MixedSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto rng = derived_rng(seed, i);
        std::uniform_real_distribution<double> snr(range.min_db, range.max_db);
        const double level = range.min_db == range.max_db ? range.min_db : snr(rng);
        out.push_back(draw_pair(rng, eeg_pool, artifact_pool, level));
    }
    return out;
}

std::vector<MixedSample> synthesize_at_levels(std::span<const Segment> eeg_pool,
                                              std::span<const Segment> artifact_pool,
                                              std::span<const double> levels_db, std::size_t per_level,
                                              std::uint64_t seed) {
    if (levels_db.empty() || per_level == 0) return {};
    require_pools(eeg_pool, artifact_pool);
    std::vector<MixedSample> out;
    out.reserve(levels_db.size() * per_level);
    std::size_t index = 0;
    for (double level : levels_db) {
        for (std::size_t i = 0; i < per_level; ++i, ++index) {
            auto rng = derived_rng(seed, index);
            out.push_back(draw_pair(rng, eeg_pool, artifact_pool, level));
        }
    }
    return out;
}

std::vector<TrainingCase> make_training_cases(std::span<const MixedSample> samples,
                                              std::span<const Segment> eeg_pool,
                                              std::span<const Segment> artifact_pool, const MixRatios& ratios,
                                              std::uint64_t seed) {
    ratios.validate();
    if (ratios.weights[1] > 0.0 && eeg_pool.empty()) {
        throw std::invalid_argument("case 2 requested but the clean EEG pool is empty");
    }
    if (ratios.weights[2] > 0.0 && artifact_pool.empty()) {
        throw std::invalid_argument("case 3 requested but the artifact pool is empty");
    }
    std::vector<TrainingCase> cases;
    cases.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto rng = derived_rng(seed, i, 1);
        std::discrete_distribution<int> which(ratios.weights.begin(), ratios.weights.end());
        TrainingCase c;
        switch (which(rng)) {
            case 0:
                c.kind = CaseKind::RawToClean;
                c.indicator = IndicatorMode::Signal;
                c.input = samples[i].y;
                c.target = samples[i].x;
                break;
            case 1: {
                std::uniform_int_distribution<std::size_t> pick(0, eeg_pool.size() - 1);
                c.kind = CaseKind::CleanToClean;
                c.indicator = IndicatorMode::Signal;
                c.input = eeg_pool[pick(rng)].samples;
                c.target = c.input;
                break;
            }
            default: {
                std::uniform_int_distribution<std::size_t> pick(0, artifact_pool.size() - 1);
                c.kind = CaseKind::ArtifactToArtifact;
                c.indicator = IndicatorMode::Artifact;
                c.input = artifact_pool[pick(rng)].samples;
                c.target = c.input;
                break;
            }
        }
        cases.push_back(std::move(c));
    }
    std::mt19937_64 shuffler = derived_rng(seed, 0, 2);
    std::shuffle(cases.begin(), cases.end(), shuffler);
    return cases;
}

std::pair<std::vector<Segment>, std::vector<Segment>> split_pool(std::span<const Segment> pool, double test_fraction,
                                                                 std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
        throw std::invalid_argument("test fraction must lie in [0, 1]");
    }
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = derived_rng(seed, 0, 5);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(pool.size())));
    std::vector<bool> is_test(pool.size(), false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
    std::pair<std::vector<Segment>, std::vector<Segment>> out;
    for (std::size_t i = 0; i < pool.size(); ++i) (is_test[i] ? out.second : out.first).push_back(pool[i]);
    return out;
}

}  // namespace deepsep
