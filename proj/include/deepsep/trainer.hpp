#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepsep/adam.hpp"
#include "deepsep/datagen.hpp"
#include "deepsep/errors.hpp"
#include "deepsep/lms.hpp"
#include "deepsep/metrics.hpp"
#include "deepsep/model.hpp"

namespace deepsep {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;
    std::size_t checkpoint_interval = 0;  // epochs; 0 disables
    std::filesystem::path checkpoint_dir;
    bool verbose = false;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double validation_loss = 0.0;  // NaN when there is no validation split
    std::array<double, 3> case_loss{};       // mean loss per case kind 1..3
    std::array<std::size_t, 3> case_count{};
    double wall_seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;

    /// Loss columns only; byte-identical across identical runs.
    void write_csv(const std::filesystem::path& path) const;
    /// Per-epoch wall time, kept apart from the loss log.
    void write_timing_csv(const std::filesystem::path& path) const;
};

class TrainingDivergedError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Optimizer and progress state carried across a checkpoint.
struct TrainState {
    AdamState optimizer;
    TrainLog log;
    std::size_t epochs_done = 0;
};

/// Trains `model` in place. Every batch shares one indicator mode; inputs and
/// targets are divided by the input's segment_scale before the forward pass
/// and the loss is the MSE in that standardized space. Pass `state` to resume
/// from a checkpoint; it is updated as training proceeds.
TrainLog train(NetworkParams& model, std::span<const TrainingCase> data, const TrainConfig& cfg,
               TrainState* state = nullptr);

void save_checkpoint(const std::filesystem::path& stem, const NetworkParams& model, const TrainState& state);
/// Reads <stem>.dsw and <stem>.json.
std::pair<NetworkParams, TrainState> load_checkpoint(const std::filesystem::path& stem);

/// Rounds every parameter and moment to 32-bit precision, matching exactly
/// what a checkpoint stores.
void quantize_to_checkpoint_precision(NetworkParams& model, AdamState& optimizer);

// ---- gradient check --------------------------------------------------------

struct GradcheckOptions {
    double step = 1e-5;
    double abs_floor = 1e-8;  // abs error at or below this counts as a pass
    double tolerance = 1e-4;
};

struct GradcheckEntry {
    std::string name;
    std::size_t elements = 0;
    std::size_t floored = 0;  // excluded from relative stats
    std::size_t kinked = 0;   // stencil crossed a ReLU kink; excluded from all stats
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
    double max_abs_error = 0.0;
};

struct GradcheckReport {
    CaseKind case_kind = CaseKind::RawToClean;
    std::vector<GradcheckEntry> entries;
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t elements = 0;
    std::size_t floored = 0;
    std::size_t kinked = 0;
    bool passed(double tolerance) const { return max_rel_error <= tolerance; }
};

/// One case of each kind built from a surrogate clean EEG segment and a
/// zero-mean EMG segment mixed at -2 dB.
std::vector<TrainingCase> gradcheck_cases(std::uint64_t seed, std::size_t length = 32);

/// Compares backprop gradients of the standardized MSE for one case against
/// central differences over every parameter element. An element whose +h or
/// -h evaluation flips any ReLU input sign relative to the unperturbed pass
/// is counted as kinked instead of compared.
GradcheckReport gradcheck(const NetworkParams& model, const TrainingCase& sample, const GradcheckOptions& opts = {});

// ---- evaluation ------------------------------------------------------------

/// Maps one contaminated sample to a denoised estimate of its clean signal.
using Denoiser = std::function<std::vector<double>(const MixedSample&)>;

Denoiser deepsep_denoiser(const NetworkParams& model);
/// Adaptive filter using the true scaled artifact as its reference.
Denoiser lms_denoiser(const LmsConfig& cfg = {});
Denoiser identity_denoiser();
/// Returns the ground truth; a perfect-model stub.
Denoiser oracle_denoiser();

struct EvalOptions {
    double sampling_rate = kDefaultSamplingRate;
    WelchConfig welch{};
    std::optional<std::pair<int, int>> snr_levels;  // integer buckets, inclusive
    std::size_t threads = 1;
};

MetricsReport evaluate(const Denoiser& method, std::span<const MixedSample> test, const std::string& method_name,
                       const std::string& artifact, const EvalOptions& opts = {});
MetricsReport evaluate(const NetworkParams& model, std::span<const MixedSample> test, const EvalOptions& opts = {});

/// Worker count from DEEPSEP_THREADS (default 1).
std::size_t worker_threads_from_env();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index runs
/// exactly once; callers write results by index.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace deepsep
