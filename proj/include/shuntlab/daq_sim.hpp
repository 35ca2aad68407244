#pragma once

// Software stand-in for the measurement hardware: turns a GPIO command log and
// a workload profile into the trace the DAQ would have recorded under either
// circuit, together with the ground truth needed to score the analysis.
//
// Relay circuit: one channel. The shunt is connected to the meter only while
// the relay is closed; otherwise the meter reads idle noise.
// Trigger circuit: two channels. The shunt is always connected; the second
// channel carries the GPIO logic level.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "acquisition.hpp"
#include "error.hpp"
#include "gpio_log.hpp"
#include "trace.hpp"
#include "workload.hpp"

namespace shuntlab {

inline constexpr double kDefaultClockHz = 2.3e9;
inline constexpr double kLoopInstructionsPerIteration = 3.0; // add, cmp, blt

// Execution time of a counting loop, at one instruction per cycle.
inline double instructions_to_duration(double iterations, double instr_per_iter = kLoopInstructionsPerIteration,
                                       double clock_hz = kDefaultClockHz) {
    if (!(clock_hz > 0.0)) throw argument_error("instructions_to_duration: clock must be positive");
    return iterations * instr_per_iter / clock_hz;
}

// Event length past which the trigger design always registers a toggle.
inline double trigger_hit_threshold(double instructions = 225000.0, double clock_hz = kDefaultClockHz) {
    if (!(clock_hz > 0.0)) throw argument_error("trigger_hit_threshold: clock must be positive");
    return instructions / clock_hz;
}

enum class Circuit { relay, trigger };

inline std::string_view to_string(Circuit c) noexcept { return c == Circuit::relay ? "relay" : "trigger"; }

// Switching element model. The probability of registering a toggle rises
// linearly from floor_hit_prob for a zero-length event to 1 at
// full_confidence_s. A registered toggle closes the circuit
// nominal_latency_s after activation and opens it nominal_latency_s after the
// later of deactivation and closure.
struct RelayModel {
    double nominal_latency_s = 5.0e-4;
    double full_confidence_s = instructions_to_duration(325000.0); // 975K instructions
    double floor_hit_prob = 0.3;

    static RelayModel relay_defaults() { return {}; }

    // GPIO level is sampled directly: no actuation delay, and 25K iterations
    // (1/3 of the threshold) yield 8 hits in 10.
    static RelayModel trigger_defaults() { return {0.0, trigger_hit_threshold(), 0.7}; }

    static RelayModel defaults_for(Circuit c) { return c == Circuit::relay ? relay_defaults() : trigger_defaults(); }

    std::string validate() const {
        if (!(floor_hit_prob >= 0.0 && floor_hit_prob <= 1.0)) return "relay_model.floor_hit_prob must lie in [0, 1]";
        if (!(nominal_latency_s >= 0.0) || !std::isfinite(nominal_latency_s))
            return "relay_model.nominal_latency_s must be non-negative";
        if (!(full_confidence_s >= 0.0) || !std::isfinite(full_confidence_s))
            return "relay_model.full_confidence_s must be non-negative";
        return {};
    }
};

inline double hit_probability(double event_duration_s, const RelayModel& model) {
    if (event_duration_s < 0.0) throw argument_error("hit_probability: negative duration");
    if (event_duration_s >= model.full_confidence_s) return 1.0;
    const double f = event_duration_s / model.full_confidence_s;
    return model.floor_hit_prob + (1.0 - model.floor_hit_prob) * f;
}

// Zero-mean uniform power noise on [-bound, +bound] watts.
struct NoiseModel {
    double idle_power_bound_w = 0.001;
};

struct LogicLevels {
    double high_v = 1.8;
    double threshold_v = 0.9;
};

struct Scenario {
    double duration_s = 1.0;
    Circuit circuit = Circuit::relay;
    AcquisitionConfig config{40000.0, 1, {}};
    ShuntConfig shunt;
    WorkloadProfile workload;
    GpioCommandLog gpio;
    std::optional<int> port; // GPIO pin wired to the circuit
    RelayModel relay_model;
    NoiseModel noise;
    LogicLevels logic;
    std::uint64_t seed = 0;
};

struct TruthWindow {
    int port = 0;
    double intended_begin_s = 0.0;
    double intended_end_s = 0.0;
    std::optional<MeasurementWindow> realized; // empty: miss
    double true_energy_j = 0.0;

    bool hit() const noexcept { return realized.has_value(); }
};

struct GroundTruth {
    std::uint64_t seed = 0;
    double rate_hz = 0.0;
    std::size_t samples = 0;
    std::vector<TruthWindow> windows;
};

struct SimulationResult {
    PowerTrace trace;
    GroundTruth truth;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// [0, 1) with 53 random bits; independent of the standard library's
// distribution implementations so traces are identical across toolchains.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t first_sample_at_or_after(double t, double rate_hz) {
    const double x = t * rate_hz;
    auto i = static_cast<std::size_t>(std::ceil(x - 1e-9));
    return i;
}

} // namespace detail

// Run-level seed derivation for repeated sessions.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t run) {
    return detail::splitmix64(base ^ detail::splitmix64(run + 1));
}

inline std::size_t sample_count(const Scenario& s) {
    return static_cast<std::size_t>(std::llround(s.duration_s * channel_rate(s.config)));
}

// Port that drives the circuit; throws data_error when it cannot be inferred.
inline int wired_port(const Scenario& s) {
    if (s.port) return *s.port;
    std::optional<int> seen;
    for (const auto& c : s.gpio) {
        if (seen && *seen != c.port)
            throw data_error("scenario: gpio log uses several ports; set 'port' to the wired one");
        seen = c.port;
    }
    return seen.value_or(40);
}

// Returns a list of problems; empty when the scenario can be simulated.
inline std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> errs;
    if (!(s.duration_s > 0.0) || !std::isfinite(s.duration_s)) errs.push_back("duration_s must be positive");
    try {
        channel_rate(s.config);
    } catch (const argument_error& e) {
        errs.push_back(e.what());
    }
    if (s.circuit == Circuit::relay && s.config.channels != 1) errs.push_back("relay circuit requires 1 channel");
    if (s.circuit == Circuit::trigger && s.config.channels != 2) errs.push_back("trigger circuit requires 2 channels");
    if (auto w = s.workload.validate(s.duration_s); !w.empty()) errs.push_back(w);
    if (auto r = s.relay_model.validate(); !r.empty()) errs.push_back(r);
    if (!(s.noise.idle_power_bound_w >= 0.0)) errs.push_back("noise.idle_power_bound_w must be non-negative");
    if (!(s.logic.high_v > s.logic.threshold_v) || !(s.logic.threshold_v > 0.0))
        errs.push_back("logic levels need 0 < threshold_v < high_v");
    for (std::size_t i = 0; i < s.gpio.size(); ++i) {
        const auto& c = s.gpio[i];
        if (!(c.t_s >= 0.0 && c.t_s <= s.duration_s))
            errs.push_back(fmt::format("gpio[{}]: t_s={} outside [0, {}]", i, c.t_s, s.duration_s));
    }
    for (const auto& v : check_alternation(s.gpio)) errs.push_back("gpio log " + v.message);
    if (!errs.empty()) return errs;

    int port = 0;
    try {
        port = wired_port(s);
    } catch (const data_error& e) {
        errs.push_back(e.what());
        return errs;
    }
    const double lat = s.relay_model.nominal_latency_s;
    double prev_open = -1.0;
    for (const auto& w : intended_windows(s.gpio, port)) {
        if (w.begin_s + lat < prev_open)
            errs.push_back(fmt::format("gpio: activation at {} s comes before the circuit reopens at {} s", w.begin_s,
                                       prev_open - lat));
        prev_open = std::max(w.end_s, w.begin_s + lat) + lat;
    }
    return errs;
}

inline SimulationResult simulate_session(const Scenario& s) {
    if (auto errs = validate_scenario(s); !errs.empty()) throw data_error("scenario: " + errs.front());

    const double rate = channel_rate(s.config);
    const std::size_t n = sample_count(s);
    const int port = wired_port(s);
    const auto windows = intended_windows(s.gpio, port);

    std::mt19937_64 hit_rng(detail::splitmix64(s.seed));
    std::mt19937_64 noise_rng(detail::splitmix64(s.seed ^ 0x6e6f697365ULL));

    GroundTruth truth{s.seed, rate, n, {}};
    std::vector<char> closed(n, 0);
    const double lat = s.relay_model.nominal_latency_s;
    for (const auto& w : windows) {
        TruthWindow tw{w.port, w.begin_s, w.end_s, std::nullopt, s.workload.energy(w.begin_s, w.end_s)};
        const double u = detail::unit_uniform(hit_rng);
        if (u < hit_probability(w.end_s - w.begin_s, s.relay_model)) {
            const double close_t = w.begin_s + lat;
            const double open_t = std::max(w.end_s, close_t) + lat;
            const std::size_t b = std::min(detail::first_sample_at_or_after(close_t, rate), n);
            const std::size_t e = std::min(detail::first_sample_at_or_after(open_t, rate), n);
            if (e > b) {
                tw.realized = MeasurementWindow{b, e};
                std::fill(closed.begin() + static_cast<std::ptrdiff_t>(b), closed.begin() + static_cast<std::ptrdiff_t>(e), 1);
            }
        }
        truth.windows.push_back(tw);
    }

    const double bound = s.noise.idle_power_bound_w;
    std::vector<double> vs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        const bool connected = s.circuit == Circuit::trigger || closed[i];
        double watts = connected ? s.workload.power_at(t) : 0.0;
        if (bound > 0.0) watts += (2.0 * detail::unit_uniform(noise_rng) - 1.0) * bound;
        vs[i] = power_to_sample(watts, s.shunt);
    }

    std::optional<std::vector<double>> trig;
    if (s.circuit == Circuit::trigger) {
        trig.emplace(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (closed[i]) (*trig)[i] = s.logic.high_v;
    }
    return {PowerTrace(rate, s.shunt, std::move(vs), std::move(trig)), std::move(truth)};
}

} // namespace shuntlab
