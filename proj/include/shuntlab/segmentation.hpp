#pragma once

// Recovering measurement windows from a trace, and scoring recovered windows
// against the toggles a program intended.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "error.hpp"
#include "gpio_log.hpp"
#include "trace.hpp"

namespace shuntlab {

struct SegmentationParams {
    double relay_threshold_w = 0.005;  // 5x the default idle noise bound
    std::size_t min_window_samples = 4;
    double trigger_logic_threshold_v = 0.9;
};

struct Segmentation {
    std::vector<MeasurementWindow> windows;
    bool truncated = false; // last window still open at trace end
};

namespace detail {

// Maximal runs of `true` in mask.
inline std::vector<MeasurementWindow> runs_of(const std::vector<char>& mask) {
    std::vector<MeasurementWindow> runs;
    std::size_t i = 0;
    while (i < mask.size()) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        const std::size_t b = i;
        while (i < mask.size() && mask[i]) ++i;
        runs.push_back({b, i});
    }
    return runs;
}

} // namespace detail

// Relay design: the meter reads ~0 while the relay is open, so connected
// stretches are runs with |power| >= threshold. Idle gaps shorter than
// min_window_samples are bridged, then runs shorter than that are dropped.
inline Segmentation segment_relay(const PowerTrace& trace, const SegmentationParams& params = {}) {
    if (trace.has_trigger()) throw mode_error("segment_relay: trace has a trigger channel; use trigger mode");
    if (params.min_window_samples < 1) throw argument_error("segment_relay: min_window_samples must be >= 1");

    std::vector<char> active(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i)
        active[i] = std::abs(trace.power_at(i)) >= params.relay_threshold_w;

    std::vector<MeasurementWindow> merged;
    for (const auto& r : detail::runs_of(active)) {
        if (!merged.empty() && r.begin - merged.back().end < params.min_window_samples)
            merged.back().end = r.end;
        else
            merged.push_back(r);
    }
    Segmentation out;
    for (const auto& w : merged)
        if (w.size() >= params.min_window_samples) out.windows.push_back(w);
    out.truncated = !out.windows.empty() && out.windows.back().end == trace.size();
    return out;
}

// Trigger design: every maximal run of trig >= threshold is one window.
inline Segmentation segment_trigger(const PowerTrace& trace, const SegmentationParams& params = {}) {
    if (!trace.has_trigger()) throw mode_error("segment_trigger: trace has no trigger channel; use relay mode");
    std::vector<char> high(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) high[i] = trace.trig()[i] >= params.trigger_logic_threshold_v;
    Segmentation out;
    out.windows = detail::runs_of(high);
    out.truncated = !out.windows.empty() && out.windows.back().end == trace.size();
    return out;
}

struct ToggleVerdict {
    double intended_begin_s = 0.0;
    double intended_end_s = 0.0;
    std::optional<std::size_t> matched; // index into the found windows
};

struct HitMissReport {
    std::size_t expected = 0;
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::vector<ToggleVerdict> verdicts;
};

inline constexpr double kDefaultMatchTolerance_s = 2 * 5.0e-4; // twice the relay latency

// Greedy in-order matching: each intended window takes the earliest unused
// found window (after the previous match) that starts within tolerance of the
// intended start.
inline HitMissReport match_toggles(const GpioCommandLog& intended, const std::vector<MeasurementWindow>& found,
                                   double rate_hz, double tolerance_s = kDefaultMatchTolerance_s) {
    if (!(rate_hz > 0.0)) throw argument_error("match_toggles: rate must be positive");
    HitMissReport r;
    std::size_t next = 0;
    for (const auto& w : intended_windows(intended)) {
        ToggleVerdict v{w.begin_s, w.end_s, std::nullopt};
        for (std::size_t j = next; j < found.size(); ++j) {
            const double start = static_cast<double>(found[j].begin) / rate_hz;
            if (start > w.begin_s + tolerance_s) break;
            if (std::abs(start - w.begin_s) <= tolerance_s) {
                v.matched = j;
                next = j + 1;
                break;
            }
        }
        ++r.expected;
        if (v.matched) ++r.hits;
        else ++r.misses;
        r.verdicts.push_back(v);
    }
    return r;
}

} // namespace shuntlab
