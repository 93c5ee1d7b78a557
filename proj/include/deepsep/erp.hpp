#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepsep {

/// Samples kept before and after each event. The event sample itself is
/// included, so an epoch spans pre + 1 + post samples.
struct ErpWindow {
    std::size_t pre = 0;
    std::size_t post = 0;
    std::size_t length() const { return pre + 1 + post; }
};

/// Millisecond offsets to samples, rounding both down:
/// pre = floor(pre_ms * fs / 1000), post = floor(post_ms * fs / 1000).
ErpWindow erp_window(double pre_ms, double post_ms, double fs);

class EpochOutOfRange : public std::out_of_range {
public:
    EpochOutOfRange(std::size_t event_index, std::size_t event_sample, const std::string& what)
        : std::out_of_range(what), event_index_(event_index), event_sample_(event_sample) {}
    std::size_t event_index() const { return event_index_; }
    std::size_t event_sample() const { return event_sample_; }

private:
    std::size_t event_index_;
    std::size_t event_sample_;
};

/// Event-locked average per channel: out[c][j] is the mean over events e of
/// channels[c][e - pre + j]. Every epoch must lie inside the recording.
std::vector<std::vector<double>> epoch_average(const std::vector<std::vector<double>>& channels,
                                               std::span<const std::size_t> events, const ErpWindow& window);

}  // namespace deepsep
