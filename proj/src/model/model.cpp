#include "deepsep/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace deepsep {

const char* indicator_name(IndicatorMode mode) {
    return mode == IndicatorMode::Signal ? "signal" : "artifact";
}

IndicatorMode parse_indicator(const std::string& text) {
    if (text == "signal" || text == "0") return IndicatorMode::Signal;
    if (text == "artifact" || text == "1") return IndicatorMode::Artifact;
    throw std::invalid_argument("unknown indicator mode '" + text + "' (expected signal|artifact)");
}

std::size_t ArchConfig::largest_kernel() const {
    return *std::max_element(kernels.begin(), kernels.end());
}

void ArchConfig::validate() const {
    if (branch_channels == 0) throw std::invalid_argument("architecture: branch_channels must be > 0");
    if (encoder_blocks == 0 || decomposer_blocks == 0 || decoder_blocks == 0) {
        throw std::invalid_argument("architecture: every stage needs at least one block");
    }
    for (auto k : kernels) {
        if (k == 0 || k % 2 == 0) {
            throw std::invalid_argument("architecture: kernel widths must be odd, got " + std::to_string(k));
        }
    }
}

namespace {

template <class Fn>
void for_each_named(const NetworkParams& p, Fn&& fn) {
    auto blocks = [&](const std::string& stage, const std::vector<InceptionBlockParams>& list) {
        for (std::size_t b = 0; b < list.size(); ++b) {
            for (std::size_t r = 0; r < list[b].branches.size(); ++r) {
                const auto prefix =
                    stage + ".block" + std::to_string(b) + ".branch" + std::to_string(r);
                fn(prefix + ".weight", list[b].branches[r].weight);
                fn(prefix + ".bias", list[b].branches[r].bias);
            }
        }
    };
    blocks("encoder", p.encoder);
    blocks("decomposer", p.decomposer);
    fn("decomposer.proj.weight", p.decomposer_proj.weight);
    fn("decomposer.proj.bias", p.decomposer_proj.bias);
    blocks("decoder", p.decoder);
    fn("decoder.proj.weight", p.decoder_proj.weight);
    fn("decoder.proj.bias", p.decoder_proj.bias);
}

ConvParams make_conv(std::size_t out, std::size_t in, std::size_t k) {
    return {Tensor::zeros({out, in, k}, true), Tensor::zeros({out}, true)};
}

std::vector<InceptionBlockParams> make_stage(const ArchConfig& arch, std::size_t first_in,
                                             std::size_t count) {
    std::vector<InceptionBlockParams> stage(count);
    for (std::size_t b = 0; b < count; ++b) {
        const std::size_t in = b == 0 ? first_in : arch.block_channels();
        for (std::size_t r = 0; r < 4; ++r) {
            stage[b].branches[r] = make_conv(arch.branch_channels, in, arch.kernels[r]);
        }
    }
    return stage;
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> NetworkParams::named() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for_each_named(*this, [&](std::string name, const Tensor& t) { out.emplace_back(std::move(name), t); });
    return out;
}

std::vector<Tensor> NetworkParams::tensors() const {
    std::vector<Tensor> out;
    for_each_named(*this, [&](const std::string&, const Tensor& t) { out.push_back(t); });
    return out;
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for_each_named(*this, [&](const std::string&, const Tensor& t) { n += t.numel(); });
    return n;
}

NetworkParams NetworkParams::clone() const {
    NetworkParams copy = *this;
    auto deep = [](ConvParams& c) {
        c.weight = c.weight.clone();
        c.bias = c.bias.clone();
    };
    for (auto* stage : {&copy.encoder, &copy.decomposer, &copy.decoder}) {
        for (auto& block : *stage) {
            for (auto& br : block.branches) deep(br);
        }
    }
    deep(copy.decomposer_proj);
    deep(copy.decoder_proj);
    return copy;
}

NetworkParams make_zero_params(const ArchConfig& arch) {
    arch.validate();
    NetworkParams p;
    p.arch = arch;
    const std::size_t e = arch.embed_channels();
    p.encoder = make_stage(arch, 1, arch.encoder_blocks);
    p.decomposer = make_stage(arch, 1, arch.decomposer_blocks);
    p.decomposer_proj = make_conv(e, arch.block_channels(), 1);
    p.decoder = make_stage(arch, e, arch.decoder_blocks);
    p.decoder_proj = make_conv(1, arch.block_channels(), 1);
    return p;
}

NetworkParams init_weights(const ArchConfig& arch, std::uint64_t seed) {
    NetworkParams p = make_zero_params(arch);
    std::mt19937_64 rng(seed);
    for (auto& [name, t] : p.named()) {
        if (t.rank() != 3) continue;  // biases stay zero
        const double fan_in = static_cast<double>(t.dim(1) * t.dim(2));
        std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / fan_in), std::sqrt(6.0 / fan_in));
        for (auto& w : t.data()) w = dist(rng);
    }
    return p;
}

Tensor inception_forward(Tape& tape, const Tensor& x, const InceptionBlockParams& block) {
    if (x.rank() != 3 || x.dim(1) != block.in_channels()) {
        throw ShapeError("inception block expects " + std::to_string(block.in_channels()) +
                         " input channels, got input " + shape_string(x.shape()));
    }
    std::array<Tensor, 4> branches;
    for (std::size_t r = 0; r < 4; ++r) {
        const auto& conv = block.branches[r];
        branches[r] = relu(tape, conv1d_same(tape, x, conv.weight, conv.bias));
    }
    return concat_channels(tape, branches);
}

namespace {
Tensor run_stage(Tape& tape, Tensor h, const std::vector<InceptionBlockParams>& stage) {
    for (const auto& block : stage) h = inception_forward(tape, h, block);
    return h;
}
}  // namespace

ForwardResult forward(Tape& tape, const Tensor& x, const NetworkParams& params, IndicatorMode mode) {
    if (x.rank() != 3 || x.dim(1) != 1) {
        throw ShapeError("forward expects single-channel input [B,1,L], got " + shape_string(x.shape()) +
                         "; run multi-channel data channel by channel");
    }
    ForwardResult r;
    r.embedding = run_stage(tape, x, params.encoder);
    Tensor d = run_stage(tape, x, params.decomposer);
    r.attenuation = sigmoid(tape, conv1d_same(tape, d, params.decomposer_proj.weight,
                                              params.decomposer_proj.bias));
    const double indicator = mode == IndicatorMode::Signal ? 0.0 : 1.0;
    Tensor gate = elementwise_sub_abs(tape, indicator, r.attenuation);
    r.attenuated = elementwise_mul(tape, gate, r.embedding);
    Tensor h = run_stage(tape, r.attenuated, params.decoder);
    r.output = conv1d_same(tape, h, params.decoder_proj.weight, params.decoder_proj.bias);
    return r;
}

double segment_scale(std::span<const double> x) {
    if (x.empty()) return 1.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(x.size()));
    if (std::isnan(sd)) return sd;
    return sd > 1e-12 ? sd : 1.0;
}

std::vector<std::vector<double>> separate_batch(const NetworkParams& params,
                                                const std::vector<std::vector<double>>& segments,
                                                IndicatorMode mode) {
    if (segments.empty()) return {};
    const std::size_t len = segments.front().size();
    for (const auto& s : segments) {
        if (s.size() != len) throw ShapeError("separate_batch: segments must share one length");
    }
    std::vector<double> scales(segments.size());
    std::vector<double> packed(segments.size() * len);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        scales[i] = segment_scale(segments[i]);
        for (std::size_t t = 0; t < len; ++t) packed[i * len + t] = segments[i][t] / scales[i];
    }
    Tape tape = Tape::inference();
    const auto x = Tensor::from({segments.size(), 1, len}, std::move(packed));
    const auto y = forward(tape, x, params, mode).output;
    std::vector<std::vector<double>> out(segments.size(), std::vector<double>(len));
    for (std::size_t i = 0; i < segments.size(); ++i) {
        for (std::size_t t = 0; t < len; ++t) out[i][t] = y.data()[i * len + t] * scales[i];
    }
    return out;
}

std::vector<double> separate(const NetworkParams& params, std::span<const double> segment,
                             IndicatorMode mode) {
    return separate_batch(params, {std::vector<double>(segment.begin(), segment.end())}, mode).front();
}

}  // namespace deepsep
