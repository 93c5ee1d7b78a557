#pragma once

// Encoder / decomposer / decoder network with a gated embedding.
//
//   z     = encoder(x)
//   v     = sigmoid(decomposer(x))          every element in (0, 1)
//   z~    = |indicator - v| * z             indicator 0 -> signal, 1 -> artifact
//   y_hat = decoder(z~)
//
// Every stage is a stack of inception blocks (kernels 3, 5, 11, 15 running in
// parallel, concatenated on the channel axis) with same-length padding, so the
// network accepts any input length. There are no fully connected layers.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "deepsep/tensor.hpp"

namespace deepsep {

enum class IndicatorMode : int { Signal = 0, Artifact = 1 };

const char* indicator_name(IndicatorMode mode);
IndicatorMode parse_indicator(const std::string& text);

struct ArchConfig {
    std::size_t branch_channels = 8;
    std::size_t encoder_blocks = 2;
    std::size_t decomposer_blocks = 2;
    std::size_t decoder_blocks = 2;
    std::array<std::size_t, 4> kernels{3, 5, 11, 15};

    std::size_t block_channels() const { return kernels.size() * branch_channels; }
    /// Channel count of z, v and z~.
    std::size_t embed_channels() const { return block_channels(); }
    std::size_t largest_kernel() const;
    void validate() const;

    friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct ConvParams {
    Tensor weight;  // [out, in, kernel]
    Tensor bias;    // [out]
};

struct InceptionBlockParams {
    std::array<ConvParams, 4> branches;
    std::size_t in_channels() const { return branches[0].weight.dim(1); }
};

struct NetworkParams {
    ArchConfig arch;
    std::vector<InceptionBlockParams> encoder;
    std::vector<InceptionBlockParams> decomposer;
    ConvParams decomposer_proj;  // 1x1 to embed_channels, followed by sigmoid
    std::vector<InceptionBlockParams> decoder;
    ConvParams decoder_proj;  // 1x1 to one channel, linear

    /// Every learnable tensor with its dotted record name, in a fixed order
    /// ("encoder.block0.branch3.weight", "decomposer.proj.bias", ...).
    std::vector<std::pair<std::string, Tensor>> named() const;
    std::vector<Tensor> tensors() const;
    std::size_t parameter_count() const;
    NetworkParams clone() const;
};

struct ForwardResult {
    Tensor output;       // y_hat [B,1,L]
    Tensor embedding;    // z     [B,E,L]
    Tensor attenuation;  // v     [B,E,L]
    Tensor attenuated;   // z~    [B,E,L]
};

Tensor inception_forward(Tape& tape, const Tensor& x, const InceptionBlockParams& block);

/// Runs the network on x [B,1,L]. Multi-channel inputs must be split by the
/// caller and run channel by channel.
ForwardResult forward(Tape& tape, const Tensor& x, const NetworkParams& params, IndicatorMode mode);

/// He-style uniform init: weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)) with
/// fan_in = in_channels * kernel; biases zero. Deterministic in `seed`.
NetworkParams init_weights(const ArchConfig& arch, std::uint64_t seed);

/// Zero-filled parameters with the given architecture.
NetworkParams make_zero_params(const ArchConfig& arch);

// ---- DSW1 weight files -----------------------------------------------------
//
// Little-endian: "DSW1", u32 tensor count, then per tensor: u16 name length,
// UTF-8 name, u8 ndim, ndim x u32 dims, prod(dims) x f32 values.

struct NamedArray {
    std::string name;
    Shape shape;
    std::vector<double> values;
};

void write_dsw(const std::filesystem::path& path, const std::vector<NamedArray>& records);
std::vector<NamedArray> read_dsw(const std::filesystem::path& path);

void save_weights(const NetworkParams& params, const std::filesystem::path& path);
/// Infers the architecture from the record names and shapes.
NetworkParams load_weights(const std::filesystem::path& path);
/// Loads and checks every record against the declared architecture.
NetworkParams load_weights(const std::filesystem::path& path, const ArchConfig& expected);

/// Builds parameters from named records (extra records are ignored).
NetworkParams params_from_records(const std::vector<NamedArray>& records, const ArchConfig& arch);
ArchConfig infer_arch(const std::vector<NamedArray>& records);
std::vector<NamedArray> params_to_records(const NetworkParams& params);

// ---- amplitude handling ----------------------------------------------------

/// Population standard deviation, or 1 when the segment is (numerically)
/// constant so that scaling is a no-op. NaN if any sample is non-finite.
double segment_scale(std::span<const double> x);

/// Denoises (or extracts the artifact from) one single-channel segment:
/// divides by segment_scale, runs the network, multiplies back.
std::vector<double> separate(const NetworkParams& params, std::span<const double> segment,
                             IndicatorMode mode);

/// Batch form of `separate`; each row is scaled independently.
std::vector<std::vector<double>> separate_batch(const NetworkParams& params,
                                                const std::vector<std::vector<double>>& segments,
                                                IndicatorMode mode);

}  // namespace deepsep
