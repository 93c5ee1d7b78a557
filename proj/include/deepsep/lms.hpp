#pragma once

#include <span>
#include <vector>

#include "deepsep/errors.hpp"

namespace deepsep {

/// Reference-based least-mean-squares noise canceller.
struct LmsConfig {
    std::size_t order = 8;           // taps M
    double step = 0.01;              // mu
    bool normalize_reference = true; // scale the reference to unit power first
    double divergence_bound = 1e8;   // |w_i| above this aborts the run
};

struct LmsResult {
    std::vector<double> denoised;            // e_t = y_t - a_t
    std::vector<double> estimated_artifact;  // a_t = w . u_t
    std::vector<double> weights;             // final taps
};

class LmsDivergedError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// For each t: u_t = (r_t, r_{t-1}, ..., r_{t-M+1}) with zeros before the
/// start, a_t = w . u_t, e_t = y_t - a_t, w <- w + 2 mu e_t u_t.
LmsResult lms_denoise(std::span<const double> contaminated, std::span<const double> reference,
                      const LmsConfig& cfg = {});

}  // namespace deepsep
