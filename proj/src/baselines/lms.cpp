#include "deepsep/lms.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace deepsep {

LmsResult lms_denoise(std::span<const double> y, std::span<const double> reference, const LmsConfig& cfg) {
    if (cfg.order < 1) throw std::invalid_argument("lms: filter order must be >= 1");
    if (!(cfg.step >= 0.0)) throw std::invalid_argument("lms: step size must be >= 0");
    if (y.size() != reference.size()) {
        throw std::invalid_argument("lms: reference length " + std::to_string(reference.size()) +
                                    " differs from signal length " + std::to_string(y.size()));
    }
    if (cfg.order > y.size()) throw std::invalid_argument("lms: filter order exceeds signal length");

    std::vector<double> ref(reference.begin(), reference.end());
    if (cfg.normalize_reference) {
        double power = 0.0;
        for (double v : ref) power += v * v;
        power /= static_cast<double>(ref.size());
        if (power > 0.0) {
            const double s = 1.0 / std::sqrt(power);
            for (double& v : ref) v *= s;
        }
    }

    const std::size_t m = cfg.order;
    LmsResult out;
    out.denoised.resize(y.size());
    out.estimated_artifact.resize(y.size());
    out.weights.assign(m, 0.0);
    std::vector<double> taps(m, 0.0);
    for (std::size_t t = 0; t < y.size(); ++t) {
        for (std::size_t i = m - 1; i > 0; --i) taps[i] = taps[i - 1];
        taps[0] = ref[t];
        double a = 0.0;
        for (std::size_t i = 0; i < m; ++i) a += out.weights[i] * taps[i];
        const double e = y[t] - a;
        out.estimated_artifact[t] = a;
        out.denoised[t] = e;
        for (std::size_t i = 0; i < m; ++i) {
            out.weights[i] += 2.0 * cfg.step * e * taps[i];
            if (!(std::abs(out.weights[i]) <= cfg.divergence_bound)) {
                throw LmsDivergedError("lms diverged at sample " + std::to_string(t) +
                                       "; try a smaller step size than " + std::to_string(cfg.step));
            }
        }
    }
    return out;
}

}  // namespace deepsep
