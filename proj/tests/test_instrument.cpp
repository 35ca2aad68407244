#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "shuntlab/daq_sim.hpp"
#include "shuntlab/instrument.hpp"
#include "shuntlab/segmentation.hpp"
#include "test_support.hpp"

using namespace shuntlab;

namespace {

// Deterministic clock advanced by hand.
struct ManualClock {
    std::shared_ptr<std::atomic<double>> now = std::make_shared<std::atomic<double>>(0.0);
    PortRegistry::Clock fn() const {
        return [n = now] { return n->load(); };
    }
    void set(double t) const { now->store(t); }
};

protocol_error::kind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const protocol_error& e) {
        return e.code();
    }
    FAIL("expected protocol_error");
    return {};
}

} // namespace

TEST_CASE("acquire grants one owner per port", "[instrument]") {
    PortRegistry reg;
    auto t = reg.acquire(40);
    CHECK(t.port == 40);
    CHECK(reg.owned(40));
    CHECK(kind_of([&] { reg.acquire(40); }) == protocol_error::kind::ownership);
    CHECK(kind_of([&] { reg.acquire(99); }) == protocol_error::kind::unknown_port);
    CHECK_NOTHROW(reg.acquire(43)); // other ports are independent
}

TEST_CASE("activate and deactivate log alternating commands", "[instrument]") {
    auto backend = std::make_shared<MemoryGpioBackend>();
    ManualClock clk;
    PortRegistry reg(backend, clk.fn());
    auto t = acquire_port(reg, 40);

    clk.set(0.5);
    activate(t);
    CHECK(reg.active(40));
    clk.set(0.7);
    CHECK(kind_of([&] { activate(t); }) == protocol_error::kind::alternation);
    CHECK(reg.log().size() == 1);
    deactivate(t);
    CHECK_FALSE(reg.active(40));

    const auto log = reg.log();
    REQUIRE(log.size() == 2);
    CHECK(log[0].t_s == 0.5);
    CHECK(log[0].action == GpioAction::activate);
    CHECK(log[1].t_s == 0.7);
    CHECK(log[1].action == GpioAction::deactivate);
    CHECK(backend->history(40) == std::vector<bool>{true, false});
    CHECK(check_alternation(log).empty());
}

TEST_CASE("interleaved ports alternate independently", "[instrument]") {
    ManualClock clk;
    PortRegistry reg(std::make_shared<MemoryGpioBackend>(), clk.fn());
    auto a = reg.acquire(40), b = reg.acquire(43);
    double t = 0.0;
    for (auto step : {0, 1, 0, 1}) {
        (void)step;
        clk.set(t += 0.1);
        activate(a);
        clk.set(t += 0.1);
        activate(b);
        clk.set(t += 0.1);
        deactivate(a);
        clk.set(t += 0.1);
        deactivate(b);
    }
    const auto log = reg.log();
    CHECK(log.size() == 16);
    CHECK(check_alternation(log).empty());
    CHECK(intended_windows(log, 40).size() == 4);
    CHECK(intended_windows(log, 43).size() == 4);
}

TEST_CASE("release rules", "[instrument]") {
    PortRegistry reg;
    SECTION("releasing an active port is refused") {
        auto t = reg.acquire(46);
        activate(t);
        CHECK(kind_of([&] { release_port(t); }) == protocol_error::kind::dangling_window);
        CHECK(reg.owned(46));
        deactivate(t);
        release_port(t);
        CHECK_FALSE(reg.owned(46));
    }
    SECTION("a released token is stale") {
        auto t = reg.acquire(46);
        release_port(t);
        CHECK(kind_of([&] { release_port(t); }) == protocol_error::kind::stale_token);
        CHECK(kind_of([&] { activate(t); }) == protocol_error::kind::stale_token);
    }
    SECTION("a port can be reacquired after release, old token stays dead") {
        auto t = reg.acquire(46);
        release_port(t);
        auto u = reg.acquire(46);
        CHECK(u.serial != t.serial);
        CHECK(kind_of([&] { activate(t); }) == protocol_error::kind::stale_token);
        CHECK_NOTHROW(activate(u));
    }
    SECTION("a token from another registry is stale") {
        PortRegistry other;
        auto t = other.acquire(46);
        t.registry = &reg;
        CHECK(kind_of([&] { activate(t); }) == protocol_error::kind::stale_token);
    }
}

TEST_CASE("export_log writes the command log CSV", "[instrument]") {
    ManualClock clk;
    PortRegistry reg(std::make_shared<MemoryGpioBackend>(), clk.fn());
    std::ostringstream empty;
    export_log(reg, empty);
    CHECK(empty.str() == "t_s,port,action\n");

    auto t = reg.acquire(52);
    clk.set(1.25);
    activate(t);
    clk.set(2.5);
    deactivate(t);
    std::ostringstream out;
    export_log(reg, out);
    CHECK(out.str() == "t_s,port,action\n1.25,52,activate\n2.5,52,deactivate\n");

    std::istringstream back(out.str());
    CHECK(read_gpio_log_csv(back) == reg.log());

    // a hand-edited log with the pair swapped is rejected by the checker
    GpioCommandLog swapped{{1.0, 52, GpioAction::deactivate}, {2.0, 52, GpioAction::activate}};
    CHECK_FALSE(check_alternation(swapped).empty());
}

TEST_CASE("scoped measurement toggles around a block", "[instrument]") {
    PortRegistry reg;
    auto t = reg.acquire(55);
    {
        ScopedMeasurement m(t);
        CHECK(reg.active(55));
    }
    CHECK_FALSE(reg.active(55));
    CHECK(reg.log().size() == 2);
}

TEST_CASE("concurrent acquires yield exactly one owner", "[instrument][concurrency][property]") {
    for (int round = 0; round < 50; ++round) {
        PortRegistry reg;
        std::atomic<int> winners{0}, refused{0};
        std::atomic<bool> go{false};
        std::vector<std::thread> threads;
        for (int i = 0; i < 8; ++i) {
            threads.emplace_back([&] {
                while (!go.load()) std::this_thread::yield();
                try {
                    reg.acquire(49);
                    ++winners;
                } catch (const protocol_error& e) {
                    if (e.code() == protocol_error::kind::ownership) ++refused;
                }
            });
        }
        go = true;
        for (auto& th : threads) th.join();
        CHECK(winners == 1);
        CHECK(refused == 7);
    }
}

TEST_CASE("per-thread ports toggle concurrently without breaking alternation", "[instrument][concurrency][property]") {
    PortRegistry reg;
    std::vector<std::thread> threads;
    for (int pin : kGpioPins) {
        threads.emplace_back([&reg, pin] {
            auto t = reg.acquire(pin);
            for (int k = 0; k < 200; ++k) {
                activate(t);
                deactivate(t);
            }
            release_port(t);
        });
    }
    for (auto& th : threads) th.join();
    const auto log = reg.log();
    CHECK(log.size() == kGpioPins.size() * 400);
    CHECK(check_alternation(log).empty());
    for (std::size_t i = 1; i < log.size(); ++i) CHECK(log[i - 1].t_s <= log[i].t_s);
}

TEST_CASE("file backend writes sysfs-style values", "[instrument]") {
    testing::TempDir dir;
    auto backend = std::make_shared<FileGpioBackend>(dir.file("gpio{pin}"));
    CHECK(backend->path_for(58) == dir.file("gpio58"));
    PortRegistry reg(backend);
    auto t = reg.acquire(58);
    auto read = [&] {
        std::ifstream in(dir.file("gpio58"));
        std::string s;
        in >> s;
        return s;
    };
    activate(t);
    CHECK(read() == "1");
    deactivate(t);
    CHECK(read() == "0");
}

TEST_CASE("exported log drives the simulator to one window per pair", "[instrument][property]") {
    testing::Gen g(77);
    for (int it = 0; it < 20; ++it) {
        ManualClock clk;
        PortRegistry reg(std::make_shared<MemoryGpioBackend>(), clk.fn());
        auto tok = reg.acquire(50);
        double t = g.uniform(0.01, 0.05);
        std::size_t pairs = 0;
        while (t < 0.9) {
            clk.set(t);
            activate(tok);
            t += g.uniform(0.002, 0.03);
            clk.set(t);
            deactivate(tok);
            ++pairs;
            t += g.uniform(0.002, 0.03);
        }

        Scenario s;
        s.circuit = g.coin() ? Circuit::relay : Circuit::trigger;
        s.config = {40000.0, s.circuit == Circuit::relay ? 1 : 2, {}};
        s.relay_model = {0.0, 0.0, 1.0};
        s.noise.idle_power_bound_w = 0.0;
        s.workload = WorkloadProfile({{0.0, 1.0, ConstantShape{g.uniform(1.0, 12.0)}}});
        s.gpio = reg.log();
        s.seed = static_cast<std::uint64_t>(it);
        const auto r = simulate_session(s);
        const auto seg = s.circuit == Circuit::relay ? segment_relay(r.trace) : segment_trigger(r.trace);
        CHECK(seg.windows.size() == pairs);
        CHECK(match_toggles(s.gpio, seg.windows, r.trace.rate_hz()).hits == pairs);
    }
}
