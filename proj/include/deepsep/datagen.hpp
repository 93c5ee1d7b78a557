#pragma once

// Semi-synthetic contaminated EEG: y = x + lambda * n, with lambda chosen so
// that 10 * log10(RMS(x) / RMS(lambda * n)) hits the requested SNR.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deepsep/model.hpp"

namespace deepsep {

enum class SegmentKind { CleanEEG, EOG, EMG };

const char* segment_kind_name(SegmentKind kind);
SegmentKind parse_segment_kind(const std::string& text);

struct Segment {
    std::vector<double> samples;
    SegmentKind kind = SegmentKind::CleanEEG;
    std::size_t source_index = 0;
};

struct MixedSample {
    std::vector<double> y;  // contaminated
    std::vector<double> x;  // clean ground truth
    std::vector<double> n;  // artifact, unscaled
    double lambda = 0.0;
    double snr_db = 0.0;
    std::size_t eeg_index = 0;
    std::size_t artifact_index = 0;

    std::vector<double> scaled_artifact() const;
};

enum class CaseKind : int { RawToClean = 1, CleanToClean = 2, ArtifactToArtifact = 3 };

struct TrainingCase {
    std::vector<double> input;
    std::vector<double> target;
    IndicatorMode indicator = IndicatorMode::Signal;
    CaseKind kind = CaseKind::RawToClean;
};

struct SnrRange {
    double min_db = -7.0;
    double max_db = 2.0;
};

struct MixRatios {
    std::array<double, 3> weights{0.8, 0.1, 0.1};  // cases 1, 2, 3
    void validate() const;
};

MixRatios parse_ratios(const std::string& text);

/// Deterministic per-item generator derived from (seed, index), so results do
/// not depend on the order items are produced in.
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0);

double rms(std::span<const double> x);
/// 10 * log10(RMS(x) / RMS(noise)).
double snr_db(std::span<const double> x, std::span<const double> noise);
double lambda_for_snr(std::span<const double> x, std::span<const double> n, double snr_db);

MixedSample mix(const Segment& eeg, const Segment& artifact, double snr_db);

/// Draws `count` samples, each pairing a uniformly chosen clean segment with a
/// uniformly chosen artifact segment (with replacement) at an SNR drawn
/// uniformly from the range.
std::vector<MixedSample> synthesize(std::span<const Segment> eeg_pool, std::span<const Segment> artifact_pool,
                                    SnrRange range, std::size_t count, std::uint64_t seed);

/// Same pairing scheme with the SNR fixed per sample: `per_level` samples for
/// each value in `levels_db`.
std::vector<MixedSample> synthesize_at_levels(std::span<const Segment> eeg_pool,
                                              std::span<const Segment> artifact_pool,
                                              std::span<const double> levels_db, std::size_t per_level,
                                              std::uint64_t seed);

/// One case per mixed sample: case kind drawn from `ratios`; case 1 uses the
/// sample itself, case 2 a random clean segment, case 3 a random artifact
/// segment. The result is shuffled deterministically under `seed`.
std::vector<TrainingCase> make_training_cases(std::span<const MixedSample> samples,
                                              std::span<const Segment> eeg_pool,
                                              std::span<const Segment> artifact_pool, const MixRatios& ratios,
                                              std::uint64_t seed);

/// Splits a pool into (train, test) with floor(test_fraction * size) test
/// segments, chosen by a deterministic shuffle under `seed`. Both halves keep
/// the pool's original order.
std::pair<std::vector<Segment>, std::vector<Segment>> split_pool(std::span<const Segment> pool, double test_fraction,
                                                                 std::uint64_t seed);

// ---- ESG1 segment files ----------------------------------------------------
//
// Little-endian: "ESG1", u32 segment count, u32 segment length, then
// count x length f32 samples, segment-major.

void save_segments(const std::filesystem::path& path, std::span<const Segment> segments);
void save_rows(const std::filesystem::path& path, const std::vector<std::vector<double>>& rows);
std::vector<Segment> load_segments(const std::filesystem::path& path, SegmentKind kind = SegmentKind::CleanEEG);
std::vector<std::vector<double>> load_rows(const std::filesystem::path& path);

// ---- surrogate segment pools ----------------------------------------------

struct SurrogateConfig {
    std::size_t length = 512;
    double sampling_rate = 256.0;
};

/// Synthetic stand-ins for recorded pools: clean EEG as 1/f background with
/// alpha/theta rhythms, EOG as blinks plus slow drift, EMG as amplitude
/// modulated 20-120 Hz noise. Deterministic under (seed, index).
Segment make_surrogate_segment(SegmentKind kind, std::size_t index, std::uint64_t seed,
                               const SurrogateConfig& cfg = {});
std::vector<Segment> make_surrogate_pool(SegmentKind kind, std::size_t count, std::uint64_t seed,
                                         const SurrogateConfig& cfg = {});

}  // namespace deepsep
