#pragma once

// Trace data model shared by every stage of the pipeline: shunt constants,
// uniformly sampled shunt-voltage traces and measurement windows.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/core.h>

#include "error.hpp"

namespace shuntlab {

// Supply voltage and shunt resistance. Power drawn by the load is
// vf * vs / rs, where vs is the voltage drop across the shunt.
class ShuntConfig {
public:
    ShuntConfig() = default;

    ShuntConfig(double vf, double rs) : vf_(vf), rs_(rs) {
        if (!(vf > 0.0) || !std::isfinite(vf))
            throw argument_error(fmt::format("shunt: source voltage must be positive, got {}", vf));
        if (!(rs > 0.0) || !std::isfinite(rs))
            throw argument_error(fmt::format("shunt: resistance must be positive, got {}", rs));
    }

    double vf() const noexcept { return vf_; }
    double rs() const noexcept { return rs_; }

    friend bool operator==(const ShuntConfig&, const ShuntConfig&) = default;

private:
    double vf_ = 12.0; // volts
    double rs_ = 0.1;  // ohms
};

struct PowerSample {
    std::size_t index = 0;
    double vs = 0.0;              // volts across the shunt
    std::optional<double> trig;   // GPIO probe channel, volts

    friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

// Instantaneous power: current vs/rs drawn from the vf supply.
inline double sample_to_power(double vs, const ShuntConfig& shunt) noexcept {
    return shunt.vf() * vs / shunt.rs();
}

// Inverse mapping, used when synthesizing traces from a power profile.
inline double power_to_sample(double watts, const ShuntConfig& shunt) noexcept {
    return watts * shunt.rs() / shunt.vf();
}

// [begin, end) in sample indices.
struct MeasurementWindow {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }

    friend bool operator==(const MeasurementWindow&, const MeasurementWindow&) = default;
};

// Uniformly sampled acquisition. Time of sample i is i / rate_hz; channel data
// is stored column-wise. The trigger column is either empty or the same length
// as the shunt column.
class PowerTrace {
public:
    PowerTrace() = default;

    PowerTrace(double rate_hz, ShuntConfig shunt, bool has_trigger)
        : rate_hz_(rate_hz), shunt_(shunt), has_trigger_(has_trigger) {}

    PowerTrace(double rate_hz, ShuntConfig shunt, std::vector<double> vs,
               std::optional<std::vector<double>> trig = std::nullopt)
        : rate_hz_(rate_hz), shunt_(shunt), has_trigger_(trig.has_value()), vs_(std::move(vs)) {
        if (trig) {
            if (trig->size() != vs_.size())
                throw argument_error("trace: trigger channel length differs from shunt channel");
            trig_ = std::move(*trig);
        }
    }

    double rate_hz() const noexcept { return rate_hz_; }
    const ShuntConfig& shunt() const noexcept { return shunt_; }
    bool has_trigger() const noexcept { return has_trigger_; }
    std::size_t size() const noexcept { return vs_.size(); }
    bool empty() const noexcept { return vs_.empty(); }

    double time_at(std::size_t i) const noexcept { return static_cast<double>(i) / rate_hz_; }
    double duration_s() const noexcept { return static_cast<double>(size()) / rate_hz_; }

    const std::vector<double>& vs() const noexcept { return vs_; }
    const std::vector<double>& trig() const noexcept { return trig_; }

    PowerSample sample(std::size_t i) const {
        PowerSample s{i, vs_.at(i), std::nullopt};
        if (has_trigger_) s.trig = trig_.at(i);
        return s;
    }

    double power_at(std::size_t i) const { return sample_to_power(vs_.at(i), shunt_); }

    void reserve(std::size_t n) {
        vs_.reserve(n);
        if (has_trigger_) trig_.reserve(n);
    }

    // Appends a sample at the next index. The sample's own index is ignored;
    // a mismatched channel layout is rejected.
    void push_back(const PowerSample& s) {
        if (s.trig.has_value() != has_trigger_)
            throw argument_error(fmt::format("trace: sample {} has the wrong channel layout", s.index));
        vs_.push_back(s.vs);
        if (has_trigger_) trig_.push_back(*s.trig);
    }

    friend bool operator==(const PowerTrace&, const PowerTrace&) = default;

private:
    double rate_hz_ = 0.0;
    ShuntConfig shunt_;
    bool has_trigger_ = false;
    std::vector<double> vs_;
    std::vector<double> trig_;
};

struct TraceViolation {
    std::optional<std::size_t> index; // offending sample, if any
    std::string message;
};

struct ValidationResult {
    std::vector<TraceViolation> violations;

    bool ok() const noexcept { return violations.empty(); }
    explicit operator bool() const noexcept { return ok(); }
};

// Reports every invariant violation instead of stopping at the first one.
inline ValidationResult validate_trace(const PowerTrace& trace) {
    ValidationResult r;
    if (!(trace.rate_hz() > 0.0) || !std::isfinite(trace.rate_hz()))
        r.violations.push_back({std::nullopt, "non-positive rate"});
    if (trace.empty())
        r.violations.push_back({std::nullopt, "empty trace"});
    if (trace.has_trigger() && trace.trig().size() != trace.size())
        r.violations.push_back({std::nullopt, "inconsistent channel layout"});
    if (!trace.has_trigger() && !trace.trig().empty())
        r.violations.push_back({std::nullopt, "inconsistent channel layout"});
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (!std::isfinite(trace.vs()[i]))
            r.violations.push_back({i, fmt::format("non-finite vs at index {}", i)});
        if (i < trace.trig().size() && !std::isfinite(trace.trig()[i]))
            r.violations.push_back({i, fmt::format("non-finite trig at index {}", i)});
    }
    return r;
}

// Pure decimation: keeps samples 0, factor, 2*factor, ... and divides the rate.
inline PowerTrace downsample(const PowerTrace& trace, std::size_t factor) {
    if (factor == 0) throw argument_error("downsample: factor must be at least 1");
    if (factor > trace.size())
        throw argument_error(fmt::format("downsample: factor {} exceeds trace length {}", factor, trace.size()));
    if (factor == 1) return trace;

    const std::size_t n = (trace.size() + factor - 1) / factor;
    std::vector<double> vs;
    vs.reserve(n);
    for (std::size_t i = 0; i < trace.size(); i += factor) vs.push_back(trace.vs()[i]);

    std::optional<std::vector<double>> trig;
    if (trace.has_trigger()) {
        trig.emplace();
        trig->reserve(n);
        for (std::size_t i = 0; i < trace.size(); i += factor) trig->push_back(trace.trig()[i]);
    }
    return PowerTrace(trace.rate_hz() / static_cast<double>(factor), trace.shunt(), std::move(vs),
                      std::move(trig));
}

// Power column of a trace, watts.
inline std::vector<double> power_series(const PowerTrace& trace) {
    std::vector<double> p;
    p.reserve(trace.size());
    for (double v : trace.vs()) p.push_back(sample_to_power(v, trace.shunt()));
    return p;
}

} // namespace shuntlab
