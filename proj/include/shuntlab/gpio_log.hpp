#pragma once

// GPIO command log: the timestamped activate/deactivate stream emitted by an
// instrumented program. CSV form is `t_s,port,action`.

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "error.hpp"
#include "trace_csv.hpp"

namespace shuntlab {

enum class GpioAction { activate, deactivate };

inline std::string_view to_string(GpioAction a) noexcept {
    return a == GpioAction::activate ? "activate" : "deactivate";
}

inline std::optional<GpioAction> parse_action(std::string_view s) {
    if (s == "activate") return GpioAction::activate;
    if (s == "deactivate") return GpioAction::deactivate;
    return std::nullopt;
}

struct GpioCommand {
    double t_s = 0.0;
    int port = 0;
    GpioAction action = GpioAction::activate;

    friend bool operator==(const GpioCommand&, const GpioCommand&) = default;
};

using GpioCommandLog = std::vector<GpioCommand>;

// One activate/deactivate pair on a port.
struct IntendedWindow {
    int port = 0;
    double begin_s = 0.0;
    double end_s = 0.0;
};

struct LogViolation {
    std::size_t entry; // 0-based index into the log
    std::string message;
};

// Per port, actions must strictly alternate starting with activate, and times
// must be non-decreasing. A trailing activate (open window) is reported too.
inline std::vector<LogViolation> check_alternation(const GpioCommandLog& log, bool allow_open = false) {
    std::vector<LogViolation> out;
    struct State {
        bool active = false;
        double last_t = -1.0;
        std::size_t last_entry = 0;
    };
    std::map<int, State> ports;
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& c = log[i];
        auto& st = ports[c.port];
        if (c.t_s < st.last_t)
            out.push_back({i, fmt::format("entry {}: port {} time {} goes backwards", i, c.port, c.t_s)});
        const bool want_activate = !st.active;
        if ((c.action == GpioAction::activate) != want_activate) {
            out.push_back({i, fmt::format("entry {}: port {} {} while {}", i, c.port, to_string(c.action),
                                          st.active ? "active" : "inactive")});
            continue;
        }
        st.active = !st.active;
        st.last_t = c.t_s;
        st.last_entry = i;
    }
    if (!allow_open) {
        for (const auto& [port, st] : ports)
            if (st.active)
                out.push_back({st.last_entry, fmt::format("entry {}: port {} never deactivated", st.last_entry, port)});
    }
    return out;
}

// Pairs each activate with its deactivate; windows sorted by begin time.
// Throws data_error on a log that fails check_alternation.
inline std::vector<IntendedWindow> intended_windows(const GpioCommandLog& log,
                                                    std::optional<int> port = std::nullopt) {
    if (auto v = check_alternation(log); !v.empty()) throw data_error("gpio log: " + v.front().message);
    std::vector<IntendedWindow> out;
    std::map<int, double> open;
    for (const auto& c : log) {
        if (port && c.port != *port) continue;
        if (c.action == GpioAction::activate) {
            open[c.port] = c.t_s;
        } else {
            out.push_back({c.port, open[c.port], c.t_s});
            open.erase(c.port);
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const IntendedWindow& a, const IntendedWindow& b) { return a.begin_s < b.begin_s; });
    return out;
}

inline void write_gpio_log_csv(std::ostream& out, const GpioCommandLog& log) {
    out << "t_s,port,action\n";
    for (const auto& c : log) fmt::print(out, "{},{},{}\n", c.t_s, c.port, to_string(c.action));
}

inline void write_gpio_log_csv(const std::string& path, const GpioCommandLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error(fmt::format("gpio log: cannot write '{}'", path));
    write_gpio_log_csv(out, log);
}

inline GpioCommandLog read_gpio_log_csv(std::istream& in) {
    GpioCommandLog log;
    std::string raw;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto cols = detail::split_commas(line);
        if (!header) {
            if (cols.size() != 3 || cols[0] != "t_s" || cols[1] != "port" || cols[2] != "action")
                throw data_error("gpio log: expected header 't_s,port,action'", line_no);
            header = true;
            continue;
        }
        if (cols.size() != 3) throw data_error("gpio log: expected 3 columns", line_no);
        auto t = detail::parse_double(cols[0]);
        int port = 0;
        auto [ptr, ec] = std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), port);
        auto action = parse_action(cols[2]);
        if (!t || !std::isfinite(*t) || ec != std::errc{} || ptr != cols[1].data() + cols[1].size() || !action)
            throw data_error("gpio log: malformed row", line_no);
        log.push_back({*t, port, *action});
    }
    if (!header) throw data_error("gpio log: missing header", line_no);
    return log;
}

inline GpioCommandLog read_gpio_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(fmt::format("gpio log: cannot open '{}'", path));
    return read_gpio_log_csv(in);
}

} // namespace shuntlab
