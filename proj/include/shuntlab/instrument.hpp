#pragma once

// Target-side instrumentation: a registry of the board's GPIO ports, tokens
// that grant one owner the right to toggle a port, and the command log that
// records every toggle.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"
#include "gpio_log.hpp"

namespace shuntlab {

// Expansion-header pins usable as measurement signals. Connector labels
// J3A1/J3A2 are not separate ports.
inline constexpr std::array<int, 8> kGpioPins = {40, 43, 46, 49, 52, 55, 58, 50};

class GpioBackend {
public:
    virtual ~GpioBackend() = default;
    virtual void write(int pin, bool level) = 0;
};

// Records levels per pin. Pins are independent; writes to different pins do
// not contend.
class MemoryGpioBackend final : public GpioBackend {
public:
    void write(int pin, bool level) override {
        auto& slot = slot_for(pin);
        std::lock_guard lock(slot.mu);
        slot.levels.push_back(level);
    }

    std::vector<bool> history(int pin) const {
        auto& slot = slot_for(pin);
        std::lock_guard lock(slot.mu);
        return slot.levels;
    }

private:
    struct Slot {
        std::mutex mu;
        std::vector<bool> levels;
    };

    Slot& slot_for(int pin) const {
        for (std::size_t i = 0; i < kGpioPins.size(); ++i)
            if (kGpioPins[i] == pin) return slots_[i];
        throw protocol_error(protocol_error::kind::unknown_port, fmt::format("gpio: unknown pin {}", pin));
    }

    mutable std::array<Slot, kGpioPins.size()> slots_;
};

// Writes "1"/"0" to a per-pin value file, as with Linux sysfs GPIO. The
// pattern's "{pin}" is replaced by the pin number.
class FileGpioBackend final : public GpioBackend {
public:
    explicit FileGpioBackend(std::string pattern = "/sys/class/gpio/gpio{pin}/value") : pattern_(std::move(pattern)) {}

    std::string path_for(int pin) const {
        std::string p = pattern_;
        const std::string key = "{pin}";
        if (auto pos = p.find(key); pos != std::string::npos) p.replace(pos, key.size(), std::to_string(pin));
        return p;
    }

    void write(int pin, bool level) override {
        const auto path = path_for(pin);
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw std::runtime_error(fmt::format("gpio: cannot open '{}'", path));
        out << (level ? "1" : "0");
        out.flush();
        if (!out) throw std::runtime_error(fmt::format("gpio: write to '{}' failed", path));
    }

private:
    std::string pattern_;
};

class PortRegistry;

// Right to toggle one port. Copyable handle; only the copy issued by the most
// recent acquire is live, and it dies on release.
struct ToggleToken {
    int port = 0;
    std::uint64_t owner = 0;
    double issued_at_s = 0.0;
    std::uint64_t serial = 0;
    PortRegistry* registry = nullptr;
};

class PortRegistry {
public:
    using Clock = std::function<double()>; // seconds since session start

    explicit PortRegistry(std::shared_ptr<GpioBackend> backend = std::make_shared<MemoryGpioBackend>(),
                          Clock clock = {})
        : backend_(std::move(backend)), clock_(std::move(clock)) {
        if (!clock_) {
            const auto t0 = std::chrono::steady_clock::now();
            clock_ = [t0] {
                return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            };
        }
    }

    PortRegistry(const PortRegistry&) = delete;
    PortRegistry& operator=(const PortRegistry&) = delete;

    static bool known_port(int port) {
        return std::find(kGpioPins.begin(), kGpioPins.end(), port) != kGpioPins.end();
    }

    ToggleToken acquire(int port, std::uint64_t owner) {
        auto& st = state(port);
        std::lock_guard lock(st.mu);
        if (st.live_serial != 0)
            throw protocol_error(protocol_error::kind::ownership, fmt::format("port {} is already owned", port));
        st.live_serial = next_serial_.fetch_add(1) + 1;
        return ToggleToken{port, owner, clock_(), st.live_serial, this};
    }

    ToggleToken acquire(int port) {
        return acquire(port, std::hash<std::thread::id>{}(std::this_thread::get_id()));
    }

    void activate(const ToggleToken& token) { toggle(token, GpioAction::activate); }
    void deactivate(const ToggleToken& token) { toggle(token, GpioAction::deactivate); }

    void release(const ToggleToken& token) {
        auto& st = checked(token);
        std::lock_guard lock(st.mu);
        require_live(st, token);
        if (st.active)
            throw protocol_error(protocol_error::kind::dangling_window,
                                 fmt::format("port {} released while active; deactivate first", token.port));
        st.live_serial = 0;
    }

    bool owned(int port) {
        auto& st = state(port);
        std::lock_guard lock(st.mu);
        return st.live_serial != 0;
    }

    bool active(int port) {
        auto& st = state(port);
        std::lock_guard lock(st.mu);
        return st.active;
    }

    // All ports' commands merged by time (ties keep issue order).
    GpioCommandLog log() {
        std::vector<Entry> all;
        for (auto& st : ports_) {
            std::lock_guard lock(st.mu);
            all.insert(all.end(), st.entries.begin(), st.entries.end());
        }
        std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
            return a.cmd.t_s != b.cmd.t_s ? a.cmd.t_s < b.cmd.t_s : a.seq < b.seq;
        });
        GpioCommandLog out;
        out.reserve(all.size());
        for (const auto& e : all) out.push_back(e.cmd);
        return out;
    }

private:
    struct Entry {
        GpioCommand cmd;
        std::uint64_t seq;
    };

    struct PortState {
        std::mutex mu;
        std::uint64_t live_serial = 0; // 0: unowned
        bool active = false;
        std::vector<Entry> entries;
    };

    PortState& state(int port) {
        for (std::size_t i = 0; i < kGpioPins.size(); ++i)
            if (kGpioPins[i] == port) return ports_[i];
        throw protocol_error(protocol_error::kind::unknown_port, fmt::format("unknown GPIO port {}", port));
    }

    PortState& checked(const ToggleToken& token) {
        if (token.registry != this)
            throw protocol_error(protocol_error::kind::stale_token, "token was issued by another registry");
        return state(token.port);
    }

    static void require_live(const PortState& st, const ToggleToken& token) {
        if (token.serial == 0 || st.live_serial != token.serial)
            throw protocol_error(protocol_error::kind::stale_token,
                                 fmt::format("token for port {} is no longer live", token.port));
    }

    void toggle(const ToggleToken& token, GpioAction action) {
        auto& st = checked(token);
        std::lock_guard lock(st.mu);
        require_live(st, token);
        const bool want = action == GpioAction::activate;
        if (st.active == want)
            throw protocol_error(protocol_error::kind::alternation,
                                 fmt::format("port {}: {} while already {}", token.port, to_string(action),
                                             want ? "active" : "inactive"));
        backend_->write(token.port, want);
        st.active = want;
        st.entries.push_back({{clock_(), token.port, action}, next_seq_.fetch_add(1)});
    }

    std::shared_ptr<GpioBackend> backend_;
    Clock clock_;
    std::array<PortState, kGpioPins.size()> ports_;
    std::atomic<std::uint64_t> next_serial_{0};
    std::atomic<std::uint64_t> next_seq_{0};
};

inline ToggleToken acquire_port(PortRegistry& registry, int port) { return registry.acquire(port); }

namespace detail {
inline PortRegistry& registry_of(const ToggleToken& t) {
    if (!t.registry) throw protocol_error(protocol_error::kind::stale_token, "token has no registry");
    return *t.registry;
}
} // namespace detail

inline void activate(const ToggleToken& token) { detail::registry_of(token).activate(token); }
inline void deactivate(const ToggleToken& token) { detail::registry_of(token).deactivate(token); }
inline void release_port(const ToggleToken& token) { detail::registry_of(token).release(token); }

inline void export_log(PortRegistry& registry, std::ostream& out) { write_gpio_log_csv(out, registry.log()); }
inline void export_log(PortRegistry& registry, const std::string& path) { write_gpio_log_csv(path, registry.log()); }

// Activates on construction and deactivates on scope exit.
class ScopedMeasurement {
public:
    explicit ScopedMeasurement(const ToggleToken& token) : token_(token) { activate(token_); }
    ~ScopedMeasurement() {
        try {
            deactivate(token_);
        } catch (...) {
        }
    }
    ScopedMeasurement(const ScopedMeasurement&) = delete;
    ScopedMeasurement& operator=(const ScopedMeasurement&) = delete;

private:
    ToggleToken token_;
};

} // namespace shuntlab
