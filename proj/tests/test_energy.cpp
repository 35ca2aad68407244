#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "shuntlab/daq_sim.hpp"
#include "shuntlab/energy.hpp"
#include "test_support.hpp"

using namespace shuntlab;
using Catch::Approx;
using testing::rel_err;

namespace {

// Closed-form oracle: integral of A*sin^2(2*pi*f*t) from 0 to T.
double sin2_integral(double amplitude, double f, double T) {
    using std::numbers::pi;
    return amplitude * (T / 2.0 - std::sin(4.0 * pi * f * T) / (8.0 * pi * f));
}

} // namespace

TEST_CASE("integrate_energy: constant shunt voltage", "[energy]") {
    for (double rate : {100.0, 20000.0, 40000.0, 123457.0}) {
        const auto n = static_cast<std::size_t>(rate) + 1; // t = 0 .. 1 s inclusive
        const PowerTrace t(rate, {}, std::vector<double>(n, 0.1));
        const MeasurementWindow w{0, n};
        const auto r = integrate_energy(t, w, ShuntConfig(12.0, 0.1));
        const double span = static_cast<double>(n - 1) / rate;
        CHECK(rel_err(r.joules, 12.0 * span) <= 1e-12);
        CHECK(rel_err(r.mean_watts * r.duration_s, r.joules) <= 1e-12);
        CHECK(r.mean_watts == Approx(12.0).epsilon(1e-12));
    }
}

TEST_CASE("integrate_energy: linear ramp is exact", "[energy]") {
    const double rate = 20000.0;
    const auto t = testing::trace_from_fn(20001, rate, [](double time) { return 0.1 * time; });
    const auto r = integrate_energy(t, {0, 20001}, ShuntConfig(12.0, 0.1));
    CHECK(rel_err(r.joules, 6.0) <= 1e-12);
    CHECK(r.duration_s == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("integrate_energy: sin^2 against the analytic integral", "[energy]") {
    const double rate = 20000.0, f = 10.0;
    const auto t = testing::trace_from_fn(20001, rate, [&](double time) {
        const double s = std::sin(2.0 * std::numbers::pi * f * time);
        return 0.1 * s * s;
    });
    const double expected = 12.0 / 0.1 * sin2_integral(0.1, f, 1.0);
    CHECK(expected == Approx(6.0).epsilon(1e-15));
    CHECK(rel_err(integrate_energy(t, {0, 20001}).joules, expected) <= 1e-6);

    // partial window, not a whole number of periods
    const std::size_t end = 7777;
    const double T = static_cast<double>(end - 1) / rate;
    CHECK(rel_err(integrate_energy(t, {0, end}).joules, 120.0 * sin2_integral(0.1, f, T)) <= 1e-6);
}

TEST_CASE("integrate_energy errors", "[energy]") {
    const PowerTrace t(1000.0, {}, std::vector<double>(10, 0.01));
    CHECK_THROWS_AS(integrate_energy(t, {3, 4}), degenerate_window_error);
    CHECK_THROWS_AS(integrate_energy(t, {5, 11}), argument_error);
    CHECK_THROWS_AS(integrate_energy(t, {5, 5}), argument_error);
    CHECK_THROWS_AS(integrate_full(PowerTrace(1000.0, {}, std::vector<double>(1, 0.01))), degenerate_window_error);
}

TEST_CASE("integrate_full over idle noise stays within the noise bound", "[energy]") {
    Scenario s; // relay circuit, no commands: pure idle noise at 40 kHz
    s.duration_s = 1.0;
    s.seed = 2024;
    const auto r = simulate_session(s);
    REQUIRE(r.trace.size() == 40000);
    CHECK(std::abs(integrate_full(r.trace).joules) <= 0.001 * 1.0);
}

TEST_CASE("integrate_full superposes idle and an active window", "[energy]") {
    Scenario s;
    s.circuit = Circuit::trigger;
    s.config = {80000.0, 2, {}};
    s.relay_model = RelayModel::trigger_defaults();
    s.duration_s = 1.0;
    s.workload = WorkloadProfile({{0.25, 0.75, ConstantShape{12.0}}});
    s.seed = 5;
    const auto r = simulate_session(s);
    const auto e = integrate_full(r.trace).joules;
    // 6 J, plus at most half a sample interval at each workload edge, plus noise
    CHECK(std::abs(e - 6.0) <= 0.001 + 12.0 / 40000.0);

    const PowerTrace zeros(40000.0, {}, std::vector<double>(40000, 0.0));
    CHECK(integrate_full(zeros).joules == 0.0);
}

TEST_CASE("energy is additive over adjacent windows", "[energy][property]") {
    testing::Gen g(1);
    for (int it = 0; it < 200; ++it) {
        const std::size_t n = g.index(3, 5000);
        const PowerTrace t(g.uniform(10.0, 1e5), {}, g.values(n, 0.0, 0.15));
        std::size_t a = g.index(0, n - 3), b = g.index(a + 1, n - 2), c = g.index(b + 1, n - 1);
        const double whole = integrate_energy(t, {a, c + 1}).joules;
        const double parts = integrate_energy(t, {a, b + 1}).joules + integrate_energy(t, {b, c + 1}).joules;
        CHECK(rel_err(parts, whole) <= 1e-12);
    }
}

TEST_CASE("energy is linear in the shunt voltage", "[energy][property]") {
    testing::Gen g(2);
    for (int it = 0; it < 100; ++it) {
        const std::size_t n = g.index(2, 3000);
        const auto vs = g.values(n, -0.01, 0.2);
        const PowerTrace t(40000.0, {}, vs);
        const double e = integrate_full(t).joules;
        for (double k : {2.0, 0.5, 0.25}) { // powers of two scale exactly
            std::vector<double> scaled(vs);
            for (auto& v : scaled) v *= k;
            CHECK(integrate_full(PowerTrace(40000.0, {}, scaled)).joules == k * e);
        }
        const double k = g.uniform(-5.0, 5.0);
        std::vector<double> scaled(vs);
        for (auto& v : scaled) v *= k;
        CHECK(integrate_full(PowerTrace(40000.0, {}, scaled)).joules == Approx(k * e).epsilon(1e-12).margin(1e-15));
    }
}

TEST_CASE("energy is monotone in window length for non-negative power", "[energy][property]") {
    testing::Gen g(3);
    const PowerTrace t(40000.0, {}, g.values(4000, 0.0, 0.15));
    double prev = -1.0;
    for (std::size_t end = 102; end <= t.size(); end += 13) {
        const double e = integrate_energy(t, {100, end}).joules;
        CHECK(e >= prev);
        prev = e;
    }
}

TEST_CASE("constant power P over T seconds integrates to P*T", "[energy][property]") {
    testing::Gen g(4);
    for (int it = 0; it < 100; ++it) {
        const double rate = g.uniform(100.0, 100000.0);
        const double P = g.uniform(0.001, 20.0);
        const std::size_t n = g.index(2, 50000);
        const ShuntConfig shunt(g.uniform(3.0, 24.0), g.uniform(0.01, 1.0));
        const auto t = testing::trace_from_power(std::vector<double>(n, P), rate, shunt);
        const double T = static_cast<double>(n - 1) / rate;
        CHECK(rel_err(integrate_full(t).joules, P * T) <= 1e-10);
    }
}

TEST_CASE("compare_resolution", "[energy]") {
    SECTION("constant workload: identical energies") {
        const PowerTrace t(200000.0, {}, std::vector<double>(10001, 0.07));
        for (std::size_t factor : {2u, 5u, 10u, 100u, 5000u}) {
            const auto c = compare_resolution(t, factor, {0, 10001}, {});
            CHECK(c.rel_diff == Approx(0.0).margin(1e-14));
        }
    }
    SECTION("ramp, factor 2: trapezoid exact at both rates") {
        const auto t = testing::trace_from_fn(2001, 2000.0, [](double time) { return 0.01 + 0.05 * time; });
        const auto c = compare_resolution(t, 2, {0, 2001}, {});
        CHECK(c.rel_diff <= 1e-12);
        CHECK(c.lo_window == MeasurementWindow{0, 1001});
    }
    SECTION("band-limited workload decimated 50x") {
        const auto t = testing::trace_from_fn(100001, 1.0e6, [](double time) {
            using std::numbers::pi;
            return 0.05 + 0.01 * std::sin(2 * pi * 37 * time) + 0.005 * std::sin(2 * pi * 100 * time + 1.0);
        });
        CHECK(compare_resolution(t, 50, {0, 100001}, {}).rel_diff < 0.02);
    }
    SECTION("errors") {
        const PowerTrace t(1000.0, {}, std::vector<double>(101, 0.01));
        CHECK_THROWS_AS(compare_resolution(t, 1, {0, 101}, {}), argument_error);
        CHECK_THROWS_AS(compare_resolution(t, 10, {0, 100}, {}), argument_error);
        CHECK_THROWS_AS(compare_resolution(t, 50, {50, 51}, {}), degenerate_window_error);
    }
}
