#pragma once

// Energy from shunt-voltage samples:
//
//   E = (vf / rs) * integral of vs(t) dt over the window
//
// approximated with the trapezoidal rule at the trace's sampling interval.

#include <cmath>
#include <cstddef>
#include <span>

#include <fmt/format.h>

#include "error.hpp"
#include "trace.hpp"

namespace shuntlab {

struct EnergyResult {
    double joules = 0.0;
    double mean_watts = 0.0;
    double duration_s = 0.0; // integrated span: (end - begin - 1) / rate
    double begin_s = 0.0;
    MeasurementWindow window;
};

// Trapezoid sum of uniformly spaced samples.
inline double trapezoid(std::span<const double> y, double dt) {
    if (y.size() < 2) return 0.0;
    // Neumaier-compensated sum; windows run to millions of samples
    double interior = 0.0, carry = 0.0;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        const double t = interior + y[i];
        carry += std::abs(interior) >= std::abs(y[i]) ? (interior - t) + y[i] : (y[i] - t) + interior;
        interior = t;
    }
    return dt * ((interior + carry) + 0.5 * (y.front() + y.back()));
}

// Integrates the closed sample span begin..end-1, so windows sharing a
// boundary sample add up exactly. Negative (noise) samples are kept as-is.
inline EnergyResult integrate_energy(const PowerTrace& trace, const MeasurementWindow& window,
                                     const ShuntConfig& shunt) {
    if (window.end > trace.size() || window.begin >= window.end)
        throw argument_error(fmt::format("integrate_energy: window [{}, {}) outside trace of {} samples", window.begin,
                                         window.end, trace.size()));
    if (window.size() < 2)
        throw degenerate_window_error(
            fmt::format("integrate_energy: window [{}, {}) has fewer than 2 samples", window.begin, window.end));
    const double dt = 1.0 / trace.rate_hz();
    std::span<const double> vs(trace.vs().data() + window.begin, window.size());
    EnergyResult r;
    r.window = window;
    r.joules = shunt.vf() / shunt.rs() * trapezoid(vs, dt);
    r.duration_s = static_cast<double>(window.size() - 1) / trace.rate_hz();
    r.mean_watts = r.joules / r.duration_s;
    r.begin_s = static_cast<double>(window.begin) / trace.rate_hz();
    return r;
}

inline EnergyResult integrate_energy(const PowerTrace& trace, const MeasurementWindow& window) {
    return integrate_energy(trace, window, trace.shunt());
}

// Whole-trace integral. Idle stretches contribute only zero-mean noise.
inline EnergyResult integrate_full(const PowerTrace& trace, const ShuntConfig& shunt) {
    return integrate_energy(trace, MeasurementWindow{0, trace.size()}, shunt);
}

inline EnergyResult integrate_full(const PowerTrace& trace) { return integrate_full(trace, trace.shunt()); }

struct ResolutionComparison {
    double e_hi = 0.0;
    double e_lo = 0.0;
    double rel_diff = 0.0;
    MeasurementWindow lo_window;
};

// Integrates `window` (indices into hi_res) at full rate and again after
// decimating by `factor`. Both ends of the window must fall on kept samples so
// the two integrals cover the same time span.
inline ResolutionComparison compare_resolution(const PowerTrace& hi_res, std::size_t factor,
                                               const MeasurementWindow& window, const ShuntConfig& shunt) {
    if (factor < 2) throw argument_error("compare_resolution: factor must be at least 2");
    if (window.begin >= window.end || window.end > hi_res.size())
        throw argument_error("compare_resolution: window outside trace");
    if (window.begin % factor != 0 || (window.end - 1) % factor != 0)
        throw argument_error(fmt::format("compare_resolution: window [{}, {}) does not align with factor {}",
                                         window.begin, window.end, factor));
    const MeasurementWindow lo{window.begin / factor, (window.end - 1) / factor + 1};
    if (lo.size() < 2)
        throw degenerate_window_error("compare_resolution: window collapses below 2 samples after decimation");

    const PowerTrace lo_trace = downsample(hi_res, factor);
    ResolutionComparison c;
    c.e_hi = integrate_energy(hi_res, window, shunt).joules;
    c.e_lo = integrate_energy(lo_trace, lo, shunt).joules;
    c.rel_diff = std::abs(c.e_hi - c.e_lo) / std::abs(c.e_hi);
    c.lo_window = lo;
    return c;
}

} // namespace shuntlab
