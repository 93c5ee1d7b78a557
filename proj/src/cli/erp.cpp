#include "deepsep/erp.hpp"

#include <cmath>
#include <string>

namespace deepsep {

ErpWindow erp_window(double pre_ms, double post_ms, double fs) {
    if (!(pre_ms >= 0.0) || !(post_ms >= 0.0) || !(fs > 0.0)) {
        throw std::invalid_argument("erp window needs non-negative offsets and a positive sampling rate");
    }
    return {static_cast<std::size_t>(std::floor(pre_ms * fs / 1000.0)),
            static_cast<std::size_t>(std::floor(post_ms * fs / 1000.0))};
}

std::vector<std::vector<double>> epoch_average(const std::vector<std::vector<double>>& channels,
                                               std::span<const std::size_t> events, const ErpWindow& window) {
    if (events.empty()) throw std::invalid_argument("erp: no events");
    const std::size_t len = channels.empty() ? 0 : channels.front().size();
    for (const auto& ch : channels) {
        if (ch.size() != len) throw std::invalid_argument("erp: channels differ in length");
    }
    for (std::size_t e = 0; e < events.size(); ++e) {
        const std::size_t t = events[e];
        if (t < window.pre || t + window.post >= len) {
            throw EpochOutOfRange(e, t,
                                  "erp: epoch for event #" + std::to_string(e) + " at sample " + std::to_string(t) +
                                      " falls outside the recording of " + std::to_string(len) + " samples");
        }
    }
    std::vector<std::vector<double>> out(channels.size(), std::vector<double>(window.length(), 0.0));
    for (std::size_t c = 0; c < channels.size(); ++c) {
        for (const std::size_t t : events) {
            const std::size_t start = t - window.pre;
            for (std::size_t j = 0; j < window.length(); ++j) out[c][j] += channels[c][start + j];
        }
        for (double& v : out[c]) v /= static_cast<double>(events.size());
    }
    return out;
}

}  // namespace deepsep
