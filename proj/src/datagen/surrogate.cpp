#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "common/fft.hpp"
#include "deepsep/datagen.hpp"

namespace deepsep {

namespace {

// Random-phase noise with a flat (alpha = 0) or 1/f^alpha amplitude spectrum
// restricted to [lo, hi] Hz, normalized to unit standard deviation.
std::vector<double> band_noise(std::mt19937_64& rng, const SurrogateConfig& cfg, double lo, double hi,
                               double alpha) {
    const std::size_t n = cfg.length;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double f = static_cast<double>(k) * cfg.sampling_rate / static_cast<double>(n);
        const double re = gauss(rng), im = gauss(rng);
        if (f < lo || f > hi) continue;
        const double amp = 1.0 / std::pow(std::max(f, 0.5), alpha);
        spec[k] = {re * amp, im * amp};
    }
    auto x = detail::irfft(spec, n);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& v : x) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    return x;
}

std::vector<double> clean_eeg(std::mt19937_64& rng, const SurrogateConfig& cfg) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto x = band_noise(rng, cfg, 1.0, 80.0, 1.0);
    const auto alpha = band_noise(rng, cfg, 8.0, 12.0, 0.0);
    const auto theta = band_noise(rng, cfg, 4.0, 7.0, 0.0);
    const double a = 0.3 + 0.7 * u(rng), t = 0.5 * u(rng);
    const double amplitude = 10.0 + 20.0 * u(rng);  // microvolt-like scale
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = amplitude * (x[i] + a * alpha[i] + t * theta[i]);
    return x;
}

std::vector<double> eog(std::mt19937_64& rng, const SurrogateConfig& cfg) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto x = band_noise(rng, cfg, 0.1, 3.0, 1.0);
    for (double& v : x) v *= 0.2;
    const double duration = static_cast<double>(cfg.length) / cfg.sampling_rate;
    const int blinks = 1 + static_cast<int>(u(rng) * 3.0);
    for (int b = 0; b < blinks; ++b) {
        const double centre = u(rng) * duration;
        const double width = 0.08 + 0.12 * u(rng);
        const double height = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + u(rng));
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double t = static_cast<double>(i) / cfg.sampling_rate;
            x[i] += height * std::exp(-0.5 * std::pow((t - centre) / width, 2.0));
        }
    }
    const double amplitude = 50.0 + 100.0 * u(rng);
    for (double& v : x) v *= amplitude;
    return x;
}

std::vector<double> emg(std::mt19937_64& rng, const SurrogateConfig& cfg) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto x = band_noise(rng, cfg, 20.0, 120.0, 0.0);
    const double duration = static_cast<double>(cfg.length) / cfg.sampling_rate;
    const double depth = 2.0 * u(rng), centre = u(rng) * duration, width = 0.2 + 0.6 * u(rng);
    const double amplitude = 10.0 + 40.0 * u(rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / cfg.sampling_rate;
        x[i] *= amplitude * (1.0 + depth * std::exp(-0.5 * std::pow((t - centre) / width, 2.0)));
    }
    return x;
}

}  // namespace

Segment make_surrogate_segment(SegmentKind kind, std::size_t index, std::uint64_t seed,
                               const SurrogateConfig& cfg) {
    if (cfg.length < 2 || !(cfg.sampling_rate > 0.0)) {
        throw std::invalid_argument("surrogate segments need length >= 2 and a positive sampling rate");
    }
    auto rng = derived_rng(seed, index, 100 + static_cast<std::uint64_t>(kind));
    Segment s;
    s.kind = kind;
    s.source_index = index;
    switch (kind) {
        case SegmentKind::CleanEEG: s.samples = clean_eeg(rng, cfg); break;
        case SegmentKind::EOG: s.samples = eog(rng, cfg); break;
        case SegmentKind::EMG: s.samples = emg(rng, cfg); break;
    }
    return s;
}

std::vector<Segment> make_surrogate_pool(SegmentKind kind, std::size_t count, std::uint64_t seed,
                                         const SurrogateConfig& cfg) {
    std::vector<Segment> pool;
    pool.reserve(count);
    for (std::size_t i = 0; i < count; ++i) pool.push_back(make_surrogate_segment(kind, i, seed, cfg));
    return pool;
}

}  // namespace deepsep
