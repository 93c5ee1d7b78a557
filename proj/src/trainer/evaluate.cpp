#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "deepsep/trainer.hpp"

namespace deepsep {

namespace {

double standardized_loss(Tape& tape, const NetworkParams& model, const Tensor& x, const Tensor& y,
                         IndicatorMode mode) {
    const auto out = forward(tape, x, model, mode).output;
    const auto loss = mse_loss(tape, out, y);
    if (tape.recording()) tape.backward(loss);
    return loss.item();
}

struct Probe {
    double loss = 0.0;
    std::vector<bool> pattern;  // sign of every ReLU input, in execution order
};

Probe probe(const NetworkParams& model, const Tensor& x, const Tensor& y, IndicatorMode mode) {
    Probe p;
    Tape tape = Tape::inference();
    tape.set_observer([&p](OpTag, std::span<const double> values) {
        for (double v : values) p.pattern.push_back(v > 0.0);
    });
    p.loss = standardized_loss(tape, model, x, y, mode);
    return p;
}

}  // namespace

std::vector<TrainingCase> gradcheck_cases(std::uint64_t seed, std::size_t length) {
    const SurrogateConfig sc{length, kDefaultSamplingRate};
    const auto eeg = make_surrogate_segment(SegmentKind::CleanEEG, 0, seed, sc);
    const auto emg = make_surrogate_segment(SegmentKind::EMG, 0, seed, sc);
    const auto s = mix(eeg, emg, -2.0);
    const auto artifact = s.scaled_artifact();
    return {
        {s.y, s.x, IndicatorMode::Signal, CaseKind::RawToClean},
        {s.x, s.x, IndicatorMode::Signal, CaseKind::CleanToClean},
        {artifact, artifact, IndicatorMode::Artifact, CaseKind::ArtifactToArtifact},
    };
}

GradcheckReport gradcheck(const NetworkParams& model, const TrainingCase& sample, const GradcheckOptions& opts) {
    NetworkParams p = model.clone();
    for (auto& t : p.tensors()) t.zero_grad();

    const std::size_t len = sample.input.size();
    const double s = segment_scale(sample.input);
    std::vector<double> xin(sample.input), yout(sample.target);
    for (double& v : xin) v /= s;
    for (double& v : yout) v /= s;
    const auto x = Tensor::from({1, 1, len}, xin);
    const auto y = Tensor::from({1, 1, len}, yout);

    {
        Tape tape;
        standardized_loss(tape, p, x, y, sample.indicator);
    }

    const auto base = probe(p, x, y, sample.indicator);
    GradcheckReport report;
    report.case_kind = sample.kind;
    double rel_sum = 0.0;
    std::size_t rel_count = 0;
    for (auto& [name, t] : p.named()) {
        GradcheckEntry e;
        e.name = name;
        e.elements = t.numel();
        auto w = t.data();
        const auto g = t.grad();
        double entry_sum = 0.0;
        std::size_t entry_count = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double original = w[i];
            w[i] = original + opts.step;
            const auto plus = probe(p, x, y, sample.indicator);
            w[i] = original - opts.step;
            const auto minus = probe(p, x, y, sample.indicator);
            w[i] = original;
            if (plus.pattern != base.pattern || minus.pattern != base.pattern) {
                e.kinked += 1;
                continue;
            }
            const double lp = plus.loss, lm = minus.loss;

            const double numeric = (lp - lm) / (2.0 * opts.step);
            const double abs_err = std::abs(numeric - g[i]);
            e.max_abs_error = std::max(e.max_abs_error, abs_err);
            if (abs_err <= opts.abs_floor) {
                e.floored += 1;
                continue;
            }
            const double rel = abs_err / std::max(std::abs(numeric), std::abs(g[i]));
            e.max_rel_error = std::max(e.max_rel_error, rel);
            entry_sum += rel;
            entry_count += 1;
        }
        e.mean_rel_error = entry_count ? entry_sum / static_cast<double>(entry_count) : 0.0;
        report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
        report.max_abs_error = std::max(report.max_abs_error, e.max_abs_error);
        report.elements += e.elements;
        report.floored += e.floored;
        report.kinked += e.kinked;
        rel_sum += entry_sum;
        rel_count += entry_count;
        report.entries.push_back(std::move(e));
    }
    report.mean_rel_error = rel_count ? rel_sum / static_cast<double>(rel_count) : 0.0;
    return report;
}

Denoiser deepsep_denoiser(const NetworkParams& model) {
    return [model](const MixedSample& s) { return separate(model, s.y, IndicatorMode::Signal); };
}

Denoiser lms_denoiser(const LmsConfig& cfg) {
    return [cfg](const MixedSample& s) { return lms_denoise(s.y, s.scaled_artifact(), cfg).denoised; };
}

Denoiser identity_denoiser() {
    return [](const MixedSample& s) { return s.y; };
}

Denoiser oracle_denoiser() {
    return [](const MixedSample& s) { return s.x; };
}

std::size_t worker_threads_from_env() {
    const char* env = std::getenv("DEEPSEP_THREADS");
    if (!env || !*env) return 1;
    try {
        const long v = std::stol(env);
        return v >= 1 ? static_cast<std::size_t>(v) : 1;
    } catch (const std::exception&) {
        return 1;
    }
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

MetricsReport evaluate(const Denoiser& method, std::span<const MixedSample> test, const std::string& method_name,
                       const std::string& artifact, const EvalOptions& opts) {
    MetricsReport report;
    report.method = method_name;
    report.artifact = artifact;
    report.samples.resize(test.size());
    parallel_for(test.size(), opts.threads, [&](std::size_t i) {
        const auto estimate = method(test[i]);
        if (estimate.size() != test[i].x.size()) {
            throw ShapeError("method '" + method_name + "' returned " + std::to_string(estimate.size()) +
                             " samples for a segment of " + std::to_string(test[i].x.size()));
        }
        auto m = score(estimate, test[i].x, opts.sampling_rate, opts.welch);
        m.index = i;
        m.snr_db = test[i].snr_db;
        report.samples[i] = m;
    });
    report.summarize(opts.snr_levels);
    return report;
}

MetricsReport evaluate(const NetworkParams& model, std::span<const MixedSample> test, const EvalOptions& opts) {
    return evaluate(deepsep_denoiser(model), test, "deepsep", "", opts);
}

}  // namespace deepsep
