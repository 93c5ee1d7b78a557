#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unistd.h>
#include <random>
#include <span>
#include <vector>

#include "deepsep/tensor.hpp"

namespace testing {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<double> v(n);
    for (double& x : v) x = nd(rng);
    return v;
}

inline deepsep::Tensor random_tensor(const deepsep::Shape& shape, std::uint64_t seed, bool requires_grad = false,
                                     double scale = 1.0) {
    return deepsep::Tensor::from(shape, random_vector(deepsep::shape_numel(shape), seed, scale), requires_grad);
}

/// y[b][o][t] = bias[o] + sum_c sum_j w[o][c][j] * x[b][c][t + j - (K-1)/2], zero outside.
inline std::vector<double> direct_conv1d(const std::vector<double>& x, const std::vector<double>& w,
                                         const std::vector<double>& bias, std::size_t batch, std::size_t cin,
                                         std::size_t cout, std::size_t len, std::size_t k) {
    std::vector<double> y(batch * cout * len, 0.0);
    const long pad = static_cast<long>(k - 1) / 2;
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < cout; ++o) {
            for (std::size_t t = 0; t < len; ++t) {
                double acc = bias[o];
                for (std::size_t c = 0; c < cin; ++c) {
                    for (std::size_t j = 0; j < k; ++j) {
                        const long src = static_cast<long>(t) + static_cast<long>(j) - pad;
                        if (src < 0 || src >= static_cast<long>(len)) continue;
                        acc += w[(o * cin + c) * k + j] * x[(b * cin + c) * len + static_cast<std::size_t>(src)];
                    }
                }
                y[(b * cout + o) * len + t] = acc;
            }
        }
    }
    return y;
}

/// Central differences of a scalar function over every element of `t`.
inline std::vector<double> numeric_gradient(deepsep::Tensor& t, const std::function<double()>& f, double h = 1e-6) {
    auto v = t.data();
    std::vector<double> g(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double orig = v[i];
        v[i] = orig + h;
        const double fp = f();
        v[i] = orig - h;
        const double fm = f();
        v[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("deepsep_" + name + "_" + std::to_string(static_cast<long>(::getpid())));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
}

}  // namespace testing
