#pragma once

// Piecewise synthetic power profiles for the simulator, with exact integrals.

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"

namespace shuntlab {

struct ConstantShape {
    double watts = 0.0;
};

// Linear from w0 at segment start to w1 at segment end.
struct RampShape {
    double w0 = 0.0;
    double w1 = 0.0;
};

// Triangle spikes: base_w at each period boundary, peak_w at mid-period.
struct SpikyShape {
    double base_w = 0.0;
    double peak_w = 0.0;
    double period_s = 1.0;
};

using WorkloadShape = std::variant<ConstantShape, RampShape, SpikyShape>;

struct WorkloadSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    WorkloadShape shape;
};

namespace detail {

// Integral of one spiky period's triangle from phase 0 to tau (0 <= tau <= p).
inline double spiky_partial(const SpikyShape& s, double tau) {
    const double p = s.period_s;
    const double h = s.peak_w - s.base_w;
    const double half = p / 2.0;
    if (tau <= half) return s.base_w * tau + h * tau * tau / p;
    const double rest = tau - half;
    // first half contributes base*half + h*half/2; second half falls from peak
    return s.base_w * half + h * half / 2.0 + s.peak_w * rest - h * rest * rest / p;
}

inline double spiky_cumulative(const SpikyShape& s, double phase) {
    const double p = s.period_s;
    const double periods = std::floor(phase / p);
    const double tau = phase - periods * p;
    return periods * (s.base_w + s.peak_w) / 2.0 * p + spiky_partial(s, tau);
}

} // namespace detail

class WorkloadProfile {
public:
    WorkloadProfile() = default;

    explicit WorkloadProfile(std::vector<WorkloadSegment> segments) : segments_(std::move(segments)) {
        std::sort(segments_.begin(), segments_.end(),
                  [](const WorkloadSegment& a, const WorkloadSegment& b) { return a.start_s < b.start_s; });
    }

    const std::vector<WorkloadSegment>& segments() const noexcept { return segments_; }

    // Empty string when valid.
    std::string validate(double duration_s) const {
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const auto& s = segments_[i];
            if (!(s.start_s >= 0.0) || !(s.end_s > s.start_s) || s.end_s > duration_s)
                return fmt::format("workload segment {} [{}, {}] not within [0, {}]", i, s.start_s, s.end_s, duration_s);
            if (i > 0 && s.start_s < segments_[i - 1].end_s)
                return fmt::format("workload segment {} overlaps segment {}", i, i - 1);
            bool ok = std::visit(
                [](const auto& sh) {
                    using T = std::decay_t<decltype(sh)>;
                    if constexpr (std::is_same_v<T, ConstantShape>) return sh.watts >= 0.0;
                    else if constexpr (std::is_same_v<T, RampShape>) return sh.w0 >= 0.0 && sh.w1 >= 0.0;
                    else return sh.base_w >= 0.0 && sh.peak_w >= 0.0 && sh.period_s > 0.0;
                },
                s.shape);
            if (!ok) return fmt::format("workload segment {} has negative power or non-positive period", i);
        }
        return {};
    }

    // Instantaneous power; 0 W outside every segment. Segments are half-open
    // [start, end) except that the final instant of the last segment counts.
    double power_at(double t) const {
        for (const auto& s : segments_) {
            if (t < s.start_s) break;
            if (t < s.end_s || (t == s.end_s && &s == &segments_.back())) return shape_power(s, t);
        }
        return 0.0;
    }

    // Exact integral of power_at over [a, b], joules.
    double energy(double a, double b) const {
        if (b <= a) return 0.0;
        double e = 0.0;
        for (const auto& s : segments_) {
            const double lo = std::max(a, s.start_s);
            const double hi = std::min(b, s.end_s);
            if (hi > lo) e += shape_integral(s, lo, hi);
        }
        return e;
    }

private:
    static double shape_power(const WorkloadSegment& s, double t) {
        return std::visit(
            [&](const auto& sh) -> double {
                using T = std::decay_t<decltype(sh)>;
                if constexpr (std::is_same_v<T, ConstantShape>) {
                    return sh.watts;
                } else if constexpr (std::is_same_v<T, RampShape>) {
                    const double f = (t - s.start_s) / (s.end_s - s.start_s);
                    return sh.w0 + (sh.w1 - sh.w0) * f;
                } else {
                    const double phase = t - s.start_s;
                    const double tau = phase - std::floor(phase / sh.period_s) * sh.period_s;
                    const double x = tau / sh.period_s; // [0, 1)
                    return sh.base_w + (sh.peak_w - sh.base_w) * (1.0 - std::abs(2.0 * x - 1.0));
                }
            },
            s.shape);
    }

    static double shape_integral(const WorkloadSegment& s, double lo, double hi) {
        return std::visit(
            [&](const auto& sh) -> double {
                using T = std::decay_t<decltype(sh)>;
                if constexpr (std::is_same_v<T, ConstantShape>) {
                    return sh.watts * (hi - lo);
                } else if constexpr (std::is_same_v<T, RampShape>) {
                    const double len = s.end_s - s.start_s;
                    const double plo = sh.w0 + (sh.w1 - sh.w0) * (lo - s.start_s) / len;
                    const double phi = sh.w0 + (sh.w1 - sh.w0) * (hi - s.start_s) / len;
                    return (plo + phi) / 2.0 * (hi - lo);
                } else {
                    return detail::spiky_cumulative(sh, hi - s.start_s) - detail::spiky_cumulative(sh, lo - s.start_s);
                }
            },
            s.shape);
    }

    std::vector<WorkloadSegment> segments_;
};

} // namespace shuntlab
