#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deepsep {

inline constexpr double kDefaultSamplingRate = 256.0;

/// RMS(y_hat - y) / RMS(y).
double rrmse_t(std::span<const double> estimate, std::span<const double> reference);

/// Pearson correlation Cov(a, b) / sqrt(Var(a) Var(b)).
double cc(std::span<const double> a, std::span<const double> b);

struct WelchConfig {
    std::size_t segment = 256;  // Hann window length
    std::size_t overlap = 128;  // samples shared by consecutive windows
};

struct Psd {
    std::vector<double> freqs;
    std::vector<double> power;  // one-sided density, units^2 / Hz
};

/// Welch estimate: periodic Hann windows, no detrending, mean of the
/// periodograms, one-sided density scaling (integrates to mean square).
Psd psd(std::span<const double> x, double fs = kDefaultSamplingRate, const WelchConfig& cfg = {});

/// RMS(PSD(y_hat) - PSD(y)) / RMS(PSD(y)).
double rrmse_s(std::span<const double> estimate, std::span<const double> reference,
               double fs = kDefaultSamplingRate, const WelchConfig& cfg = {});

struct Spectrogram {
    std::vector<double> freqs;                  // rows
    std::vector<double> times;                  // frame centres, seconds
    std::vector<std::vector<double>> magnitude; // [freq][frame], |STFT|
};

/// Hann-windowed STFT magnitude; frames = floor((L - window) / hop) + 1.
Spectrogram spectrogram(std::span<const double> x, double fs = kDefaultSamplingRate, std::size_t window = 64,
                        std::size_t hop = 32);

// ---- reports ---------------------------------------------------------------

struct SampleMetrics {
    std::size_t index = 0;
    double snr_db = 0.0;
    double rrmse_t = 0.0;
    double rrmse_s = 0.0;
    double cc = 0.0;
};

struct MetricSummary {
    std::size_t n = 0;
    double rrmse_t_mean = 0.0, rrmse_t_std = 0.0;
    double rrmse_s_mean = 0.0, rrmse_s_std = 0.0;
    double cc_mean = 0.0, cc_std = 0.0;
};

struct SnrBucket {
    int snr_db = 0;
    MetricSummary summary;
};

struct MetricsReport {
    std::string method;
    std::string artifact;
    std::vector<SampleMetrics> samples;
    MetricSummary overall;
    std::vector<SnrBucket> per_snr;  // empty unless bucketing was requested

    /// Recomputes overall (and, when requested, per-integer-SNR buckets
    /// between min_db and max_db inclusive) from `samples`.
    void summarize(std::optional<std::pair<int, int>> snr_levels = std::nullopt);

    void write_samples_csv(const std::filesystem::path& path) const;
    void write_per_snr_csv(const std::filesystem::path& path) const;
    void write_json(const std::filesystem::path& path) const;
    std::string to_json() const;
};

MetricSummary summarize(std::span<const SampleMetrics> samples);

/// Scores one estimate against its clean reference.
SampleMetrics score(std::span<const double> estimate, std::span<const double> reference,
                    double fs = kDefaultSamplingRate, const WelchConfig& cfg = {});

}  // namespace deepsep
