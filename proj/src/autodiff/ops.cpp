#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "deepsep/tensor.hpp"

namespace deepsep {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    }
}

void require_rank3(const Tensor& t, const char* op, const char* what) {
    if (t.rank() != 3) {
        throw ShapeError(std::string(op) + ": " + what + " must be rank 3, got " +
                         shape_string(t.shape()));
    }
}

// Splits weight [Cout, Cin, K] into K tap matrices of [Cout, Cin].
std::vector<RowMatrix> weight_taps(const Tensor& weight) {
    const std::size_t cout = weight.dim(0), cin = weight.dim(1), k = weight.dim(2);
    const auto w = weight.data();
    std::vector<RowMatrix> taps(k, RowMatrix(static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(cin)));
    for (std::size_t o = 0; o < cout; ++o) {
        for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t j = 0; j < k; ++j) {
                taps[j](static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c)) = w[(o * cin + c) * k + j];
            }
        }
    }
    return taps;
}

// Copies one [Cin, L] signal into the middle of a zeroed [Cin, L + K - 1] buffer.
void load_padded(const double* x, std::size_t cin, std::size_t len, std::size_t k, RowMatrix& xp) {
    const std::size_t pad = k / 2, width = len + k - 1;
    for (std::size_t c = 0; c < cin; ++c) std::copy_n(x + c * len, len, xp.data() + c * width + pad);
}

}  // namespace

Tensor conv1d_same(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias) {
    require_rank3(input, "conv1d_same", "input");
    require_rank3(weight, "conv1d_same", "weight");
    const std::size_t batch = input.dim(0), cin = input.dim(1), len = input.dim(2);
    const std::size_t cout = weight.dim(0), k = weight.dim(2);
    if (k % 2 == 0) {
        throw ShapeError("conv1d_same: kernel width must be odd, got " + std::to_string(k));
    }
    if (weight.dim(1) != cin) {
        throw ShapeError("conv1d_same: weight expects " + std::to_string(weight.dim(1)) +
                         " input channels, input has " + std::to_string(cin));
    }
    if (bias.shape() != Shape{cout}) {
        throw ShapeError("conv1d_same: bias shape " + shape_string(bias.shape()) +
                         " does not match " + std::to_string(cout) + " output channels");
    }

    Tensor out = Tensor::zeros({batch, cout, len});
    if (len == 0 || batch == 0) {
        tape.record(OpTag::Conv1dSame, {&input, &weight, &bias}, out, [] {});
        return out;
    }
    // Cross-correlation as a sum over taps: y += W_j * xpad[:, j : j + L].
    const auto l = static_cast<Eigen::Index>(len);
    const auto taps = weight_taps(weight);
    const auto b = bias.data();
    RowMatrix xp = RowMatrix::Zero(static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(len + k - 1));
    RowMatrix y(static_cast<Eigen::Index>(cout), l);
    for (std::size_t n = 0; n < batch; ++n) {
        load_padded(input.data().data() + n * cin * len, cin, len, k, xp);
        for (std::size_t o = 0; o < cout; ++o) y.row(static_cast<Eigen::Index>(o)).setConstant(b[o]);
        for (std::size_t j = 0; j < k; ++j) y.noalias() += taps[j] * xp.middleCols(static_cast<Eigen::Index>(j), l);
        std::copy_n(y.data(), cout * len, out.data().data() + n * cout * len);
    }

    tape.record(OpTag::Conv1dSame, {&input, &weight, &bias}, out,
                [input = Tensor(input), weight = Tensor(weight), bias = Tensor(bias), out, batch, cin, cout, len,
                 k]() mutable {
                    if (!out.has_grad()) return;
                    const auto g = out.grad();
                    const bool need_x = input.requires_grad();
                    const bool need_w = weight.requires_grad();
                    const bool need_b = bias.requires_grad();
                    const auto ci = static_cast<Eigen::Index>(cin);
                    const auto co = static_cast<Eigen::Index>(cout);
                    const auto l = static_cast<Eigen::Index>(len);
                    const auto width = static_cast<Eigen::Index>(len + k - 1);
                    const auto pad = static_cast<Eigen::Index>(k / 2);
                    const auto taps = weight_taps(weight);
                    std::vector<RowMatrix> gtaps(k, RowMatrix::Zero(co, ci));
                    RowMatrix xp = RowMatrix::Zero(ci, width);
                    RowMatrix gxp(ci, width);
                    RowMatrix gy(co, l);
                    for (std::size_t n = 0; n < batch; ++n) {
                        std::copy_n(g.data() + n * cout * len, cout * len, gy.data());
                        if (need_b) {
                            auto gb = bias.ensure_grad();
                            for (std::size_t o = 0; o < cout; ++o) {
                                double acc = 0.0;
                                for (std::size_t t = 0; t < len; ++t) acc += gy.data()[o * len + t];
                                gb[o] += acc;
                            }
                        }
                        if (need_w) {
                            load_padded(input.data().data() + n * cin * len, cin, len, k, xp);
                            for (std::size_t j = 0; j < k; ++j) {
                                gtaps[j].noalias() += gy * xp.middleCols(static_cast<Eigen::Index>(j), l).transpose();
                            }
                        }
                        if (need_x) {
                            gxp.setZero();
                            for (std::size_t j = 0; j < k; ++j) {
                                gxp.middleCols(static_cast<Eigen::Index>(j), l).noalias() += taps[j].transpose() * gy;
                            }
                            auto gx = input.ensure_grad().subspan(n * cin * len, cin * len);
                            for (std::size_t c = 0; c < cin; ++c) {
                                const double* src = gxp.data() + static_cast<Eigen::Index>(c) * width + pad;
                                for (std::size_t t = 0; t < len; ++t) gx[c * len + t] += src[t];
                            }
                        }
                    }
                    if (need_w) {
                        auto gw = weight.ensure_grad();
                        for (std::size_t o = 0; o < cout; ++o) {
                            for (std::size_t c = 0; c < cin; ++c) {
                                for (std::size_t j = 0; j < k; ++j) {
                                    gw[(o * cin + c) * k + j] +=
                                        gtaps[j](static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c));
                                }
                            }
                        }
                    }
                });
    return out;
}

Tensor concat_channels(Tape& tape, std::span<const Tensor> inputs) {
    if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
    for (const auto& t : inputs) require_rank3(t, "concat_channels", "input");
    if (inputs.size() == 1) return inputs.front();
    const std::size_t batch = inputs[0].dim(0), len = inputs[0].dim(2);
    std::size_t total = 0;
    for (const auto& t : inputs) {
        if (t.dim(0) != batch || t.dim(2) != len) {
            throw ShapeError("concat_channels: batch/length mismatch " + shape_string(t.shape()) +
                             " vs " + shape_string(inputs[0].shape()));
        }
        total += t.dim(1);
    }
    Tensor out = Tensor::zeros({batch, total, len});
    auto dst = out.data();
    for (std::size_t n = 0; n < batch; ++n) {
        std::size_t offset = n * total * len;
        for (const auto& t : inputs) {
            const std::size_t block = t.dim(1) * len;
            const auto src = t.data().subspan(n * block, block);
            std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
            offset += block;
        }
    }
    std::vector<Tensor> saved(inputs.begin(), inputs.end());
    tape.record(OpTag::Concat, inputs, out, [saved, out, batch, total, len]() mutable {
        if (!out.has_grad()) return;
        const auto g = out.grad();
        for (std::size_t n = 0; n < batch; ++n) {
            std::size_t offset = n * total * len;
            for (auto& t : saved) {
                const std::size_t block = t.dim(1) * len;
                if (t.requires_grad()) {
                    auto gt = t.ensure_grad().subspan(n * block, block);
                    for (std::size_t i = 0; i < block; ++i) gt[i] += g[offset + i];
                }
                offset += block;
            }
        }
    });
    return out;
}

Tensor relu(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    const auto xv = x.data();
    tape.observe(OpTag::Relu, xv);
    auto y = out.data();
    for (std::size_t i = 0; i < xv.size(); ++i) y[i] = xv[i] > 0.0 || std::isnan(xv[i]) ? xv[i] : 0.0;
    tape.record(OpTag::Relu, {&x}, out, [x = Tensor(x), out]() mutable {
        if (!out.has_grad()) return;
        const auto g = out.grad();
        const auto xv = x.data();
        auto gx = x.ensure_grad();
        for (std::size_t i = 0; i < gx.size(); ++i) {
            if (xv[i] > 0.0) gx[i] += g[i];
        }
    });
    return out;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    const auto xv = x.data();
    auto y = out.data();
    // exp(-|x|) never overflows; the sign picks the matching form. Past the
    // normal range exp(-|x|) is flushed to zero.
    constexpr double kUnderflow = 708.0;
    using Packet = Eigen::Array<double, 8, 1>;
    std::size_t i = 0;
    for (; i + 8 <= xv.size(); i += 8) {
        const Packet v = Eigen::Map<const Packet>(xv.data() + i);
        const Packet e = (v.abs() > kUnderflow).select(0.0, (-v.abs()).exp());
        Eigen::Map<Packet>(y.data() + i) = (v >= 0.0).select(1.0 / (1.0 + e), e / (1.0 + e));
    }
    for (; i < xv.size(); ++i) {
        const double e = std::abs(xv[i]) > kUnderflow ? 0.0 : std::exp(-std::abs(xv[i]));
        y[i] = xv[i] >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    }
    tape.record(OpTag::Sigmoid, {&x}, out, [x = Tensor(x), out]() mutable {
        if (!out.has_grad()) return;
        const auto g = out.grad();
        const auto y = out.data();
        auto gx = x.ensure_grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
    });
    return out;
}

Tensor elementwise_mul(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "elementwise_mul");
    Tensor out = Tensor::zeros(a.shape());
    const auto av = a.data(), bv = b.data();
    auto y = out.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
    tape.record(OpTag::Mul, {&a, &b}, out, [a = Tensor(a), b = Tensor(b), out]() mutable {
        if (!out.has_grad()) return;
        const auto g = out.grad();
        if (a.requires_grad()) {
            auto ga = a.ensure_grad();
            const auto bv = b.data();
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (b.requires_grad()) {
            auto gb = b.ensure_grad();
            const auto av = a.data();
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
    return out;
}

Tensor elementwise_sub_abs(Tape& tape, double c, const Tensor& v) {
    if (c != 0.0 && c != 1.0) {
        throw std::invalid_argument("elementwise_sub_abs: constant must be 0 or 1");
    }
    Tensor out = Tensor::zeros(v.shape());
    const auto vv = v.data();
    auto y = out.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(c - vv[i]);
    tape.record(OpTag::SubAbs, {&v}, out, [v = Tensor(v), out, c]() mutable {
        if (!out.has_grad()) return;
        const auto g = out.grad();
        const auto vv = v.data();
        auto gv = v.ensure_grad();
        // d|c - v|/dv = -sign(c - v)
        for (std::size_t i = 0; i < gv.size(); ++i) {
            const double d = c - vv[i];
            if (d > 0.0) {
                gv[i] -= g[i];
            } else if (d < 0.0) {
                gv[i] += g[i];
            }
        }
    });
    return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.shape());
    const auto av = a.data(), bv = b.data();
    auto y = out.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
    tape.record(OpTag::Add, {&a, &b}, out, [a = Tensor(a), b = Tensor(b), out]() mutable {
        if (!out.has_grad()) return;
        const auto g = out.grad();
        for (Tensor* t : {&a, &b}) {
            if (!t->requires_grad()) continue;
            auto gt = t->ensure_grad();
            for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += g[i];
        }
    });
    return out;
}

Tensor mse_loss(Tape& tape, const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse_loss");
    const auto p = pred.data(), t = target.data();
    if (p.empty()) throw ShapeError("mse_loss: empty tensors");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        sum += d * d;
    }
    Tensor out = Tensor::from({1}, {sum / static_cast<double>(p.size())});
    tape.record(OpTag::Mse, {&pred, &target}, out, [pred = Tensor(pred), target = Tensor(target), out]() mutable {
        if (!out.has_grad()) return;
        const double g = out.grad()[0];
        const auto p = pred.data(), t = target.data();
        const double scale = 2.0 * g / static_cast<double>(p.size());
        if (pred.requires_grad()) {
            auto gp = pred.ensure_grad();
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += scale * (p[i] - t[i]);
        }
        if (target.requires_grad()) {
            auto gt = target.ensure_grad();
            for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= scale * (p[i] - t[i]);
        }
    });
    return out;
}

}  // namespace deepsep
