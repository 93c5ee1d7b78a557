#pragma once

#include <complex>
#include <span>
#include <vector>

namespace deepsep::detail {

/// One-sided DFT of a real signal: n/2 + 1 bins, unnormalized.
std::vector<std::complex<double>> rfft(std::span<const double> x);

/// Inverse of rfft for a length-n signal, scaled so irfft(rfft(x)) == x.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n);

}  // namespace deepsep::detail
