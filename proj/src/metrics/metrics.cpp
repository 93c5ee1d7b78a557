#include "deepsep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "common/fft.hpp"
#include "deepsep/errors.hpp"

namespace deepsep {

namespace {

void require_equal(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": length mismatch " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    }
    if (a.empty()) throw std::invalid_argument(std::string(what) + ": empty signals");
}

double mean_square(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s / static_cast<double>(x.size());
}

std::vector<double> periodic_hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

}  // namespace

double rrmse_t(std::span<const double> estimate, std::span<const double> reference) {
    require_equal(estimate, reference, "rrmse_t");
    const double ref = std::sqrt(mean_square(reference));
    if (!(ref > 0.0)) throw std::invalid_argument("rrmse_t: reference has zero RMS");
    double s = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double d = estimate[i] - reference[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(estimate.size())) / ref;
}

double cc(std::span<const double> a, std::span<const double> b) {
    require_equal(a, b, "cc");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (!(va > 0.0) || !(vb > 0.0)) throw std::invalid_argument("cc: zero-variance input");
    const double r = cov / std::sqrt(va * vb);
    return std::clamp(r, -1.0, 1.0);
}

Psd psd(std::span<const double> x, double fs, const WelchConfig& cfg) {
    if (cfg.segment == 0 || cfg.overlap >= cfg.segment) {
        throw std::invalid_argument("psd: need segment > overlap >= 0");
    }
    if (x.size() < cfg.segment) {
        throw std::invalid_argument("psd: signal of " + std::to_string(x.size()) +
                                    " samples is shorter than the Welch segment (" +
                                    std::to_string(cfg.segment) + ")");
    }
    const std::size_t seg = cfg.segment, step = cfg.segment - cfg.overlap;
    const std::size_t windows = (x.size() - seg) / step + 1;
    const auto w = periodic_hann(seg);
    double wss = 0.0;
    for (double v : w) wss += v * v;
    const double scale = 1.0 / (fs * wss);

    Psd out;
    const std::size_t bins = seg / 2 + 1;
    out.power.assign(bins, 0.0);
    out.freqs.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) out.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(seg);

    std::vector<double> frame(seg);
    for (std::size_t win = 0; win < windows; ++win) {
        const std::size_t start = win * step;
        for (std::size_t i = 0; i < seg; ++i) frame[i] = x[start + i] * w[i];
        const auto spec = detail::rfft(frame);
        for (std::size_t k = 0; k < bins; ++k) {
            double p = std::norm(spec[k]) * scale;
            const bool edge = k == 0 || (seg % 2 == 0 && k == bins - 1);
            if (!edge) p *= 2.0;
            out.power[k] += p;
        }
    }
    for (double& p : out.power) p /= static_cast<double>(windows);
    return out;
}

double rrmse_s(std::span<const double> estimate, std::span<const double> reference, double fs,
               const WelchConfig& cfg) {
    require_equal(estimate, reference, "rrmse_s");
    const auto pe = psd(estimate, fs, cfg).power;
    const auto pr = psd(reference, fs, cfg).power;
    const double ref = std::sqrt(mean_square(pr));
    if (!(ref > 0.0)) throw std::invalid_argument("rrmse_s: reference PSD has zero RMS");
    double s = 0.0;
    for (std::size_t k = 0; k < pe.size(); ++k) s += (pe[k] - pr[k]) * (pe[k] - pr[k]);
    return std::sqrt(s / static_cast<double>(pe.size())) / ref;
}

Spectrogram spectrogram(std::span<const double> x, double fs, std::size_t window, std::size_t hop) {
    if (window == 0 || hop == 0) throw std::invalid_argument("spectrogram: window and hop must be positive");
    if (window > x.size()) {
        throw std::invalid_argument("spectrogram: window (" + std::to_string(window) + ") exceeds signal length (" +
                                    std::to_string(x.size()) + ")");
    }
    const std::size_t frames = (x.size() - window) / hop + 1;
    const std::size_t bins = window / 2 + 1;
    const auto w = periodic_hann(window);
    Spectrogram s;
    s.freqs.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) s.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(window);
    s.magnitude.assign(bins, std::vector<double>(frames, 0.0));
    s.times.resize(frames);
    std::vector<double> frame(window);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t start = f * hop;
        s.times[f] = (static_cast<double>(start) + static_cast<double>(window) / 2.0) / fs;
        for (std::size_t i = 0; i < window; ++i) frame[i] = x[start + i] * w[i];
        const auto spec = detail::rfft(frame);
        for (std::size_t k = 0; k < bins; ++k) s.magnitude[k][f] = std::abs(spec[k]);
    }
    return s;
}

SampleMetrics score(std::span<const double> estimate, std::span<const double> reference, double fs,
                    const WelchConfig& cfg) {
    SampleMetrics m;
    m.rrmse_t = rrmse_t(estimate, reference);
    m.rrmse_s = rrmse_s(estimate, reference, fs, cfg);
    m.cc = cc(estimate, reference);
    return m;
}

MetricSummary summarize(std::span<const SampleMetrics> samples) {
    MetricSummary s;
    s.n = samples.size();
    if (samples.empty()) return s;
    const double n = static_cast<double>(samples.size());
    for (const auto& m : samples) {
        s.rrmse_t_mean += m.rrmse_t;
        s.rrmse_s_mean += m.rrmse_s;
        s.cc_mean += m.cc;
    }
    s.rrmse_t_mean /= n;
    s.rrmse_s_mean /= n;
    s.cc_mean /= n;
    for (const auto& m : samples) {
        s.rrmse_t_std += (m.rrmse_t - s.rrmse_t_mean) * (m.rrmse_t - s.rrmse_t_mean);
        s.rrmse_s_std += (m.rrmse_s - s.rrmse_s_mean) * (m.rrmse_s - s.rrmse_s_mean);
        s.cc_std += (m.cc - s.cc_mean) * (m.cc - s.cc_mean);
    }
    s.rrmse_t_std = std::sqrt(s.rrmse_t_std / n);
    s.rrmse_s_std = std::sqrt(s.rrmse_s_std / n);
    s.cc_std = std::sqrt(s.cc_std / n);
    return s;
}

void MetricsReport::summarize(std::optional<std::pair<int, int>> snr_levels) {
    overall = deepsep::summarize(samples);
    per_snr.clear();
    if (!snr_levels) return;
    for (int level = snr_levels->first; level <= snr_levels->second; ++level) {
        std::vector<SampleMetrics> bucket;
        for (const auto& m : samples) {
            const int nearest = static_cast<int>(std::lround(m.snr_db));
            if (std::clamp(nearest, snr_levels->first, snr_levels->second) == level) bucket.push_back(m);
        }
        per_snr.push_back({level, deepsep::summarize(bucket)});
    }
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError(FormatErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << std::setprecision(10);
    return out;
}

nlohmann::json summary_json(const MetricSummary& s) {
    return {{"n", s.n},
            {"rrmse_t_mean", s.rrmse_t_mean},
            {"rrmse_t_std", s.rrmse_t_std},
            {"rrmse_s_mean", s.rrmse_s_mean},
            {"rrmse_s_std", s.rrmse_s_std},
            {"cc_mean", s.cc_mean},
            {"cc_std", s.cc_std}};
}

}  // namespace

void MetricsReport::write_samples_csv(const std::filesystem::path& path) const {
    auto out = open_out(path);
    out << "index,snr_db,rrmse_t,rrmse_s,cc\n";
    for (const auto& m : samples) {
        out << m.index << ',' << m.snr_db << ',' << m.rrmse_t << ',' << m.rrmse_s << ',' << m.cc << '\n';
    }
}

void MetricsReport::write_per_snr_csv(const std::filesystem::path& path) const {
    auto out = open_out(path);
    out << "snr_db,n,rrmse_t_mean,rrmse_s_mean,cc_mean\n";
    for (const auto& b : per_snr) {
        out << b.snr_db << ',' << b.summary.n << ',' << b.summary.rrmse_t_mean << ','
            << b.summary.rrmse_s_mean << ',' << b.summary.cc_mean << '\n';
    }
}

std::string MetricsReport::to_json() const {
    nlohmann::json j = summary_json(overall);
    j["method"] = method;
    j["artifact"] = artifact;
    auto buckets = nlohmann::json::array();
    for (const auto& b : per_snr) {
        auto e = summary_json(b.summary);
        e["snr_db"] = b.snr_db;
        buckets.push_back(std::move(e));
    }
    j["per_snr"] = std::move(buckets);
    return j.dump(2);
}

void MetricsReport::write_json(const std::filesystem::path& path) const {
    auto out = open_out(path);
    out << to_json() << '\n';
}

}  // namespace deepsep
