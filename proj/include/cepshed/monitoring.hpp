#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>

#include "cepshed/common.hpp"

namespace cepshed {

/// Arithmetic mean over the last `window_n` samples; during warm-up the mean
/// over whatever arrived so far.
class RunningAverage {
public:
    explicit RunningAverage(std::size_t window_n = 1000) : window_(window_n ? window_n : 1) {}

    void add(double sample) {
        samples_.push_back(sample);
        sum_ += sample;
        if (samples_.size() > window_) {
            sum_ -= samples_.front();
            samples_.pop_front();
        }
    }

    double value() const { return samples_.empty() ? 0.0 : sum_ / samples_.size(); }
    std::size_t count() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    void reset() { samples_.clear(); sum_ = 0.0; }

private:
    std::size_t window_;
    std::deque<double> samples_;
    double sum_ = 0.0;
};

/// Deviation gate for metric reports: emit when the new value moved by at
/// least `threshold` relative to the last reported one. A missing baseline
/// always emits.
bool should_emit(double new_value, std::optional<double> last_reported, double threshold);

/// One monitoring report, sent from a node to the shedding controller when
/// any tracked metric deviates beyond the update threshold.
struct MetricsUpdate {
    std::string node_id;
    double t_ms = 0.0;
    bool is_source = false;
    double avg_ptime_us = -1.0;  // operator-level mean per dequeued event; <0 when unknown
    std::map<std::string, double> ptime_by_pattern_us;
    std::map<std::string, double> output_rate_by_pattern;  // events/s
    std::map<TypeId, double> output_rates;                 // events/s per emitted type
    std::map<TypeId, double> arrival_rates;                // locally counted, informational
};

} // namespace cepshed
