#pragma once

// Text CSV trace format:
//
//   # rate_hz=40000
//   # vf=12
//   # rs=0.1
//   t_s,vs_v[,trig_v]
//   0,0.0001
//   ...
//
// Row i must carry t_s == i / rate_hz (within 1e-9 s). Doubles are written in
// shortest round-trip form, so write/read is lossless and byte-deterministic.

#include <charconv>
#include <cmath>
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
#include "trace.hpp"

namespace shuntlab {

inline constexpr double kTimestampTolerance = 1e-9;

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

} // namespace detail

struct TraceHeader {
    double rate_hz = 0.0;
    ShuntConfig shunt;
    bool has_trigger = false;
};

// Incremental reader. Parses the preamble and header on construction, then
// yields one sample per call to next(). Used both for file replay and for
// reading a live byte pipe.
class TraceCsvReader {
public:
    explicit TraceCsvReader(std::istream& in) : in_(&in) { read_preamble(); }

    const TraceHeader& header() const noexcept { return header_; }
    std::size_t line() const noexcept { return line_; }
    std::size_t position() const noexcept { return index_; }

    std::optional<PowerSample> next() {
        std::string raw;
        while (std::getline(*in_, raw)) {
            ++line_;
            auto line = detail::trim(raw);
            if (line.empty() || line.front() == '#') continue;
            return parse_row(line);
        }
        if (in_->bad()) throw stream_error("trace: read failure", index_);
        return std::nullopt;
    }

private:
    void read_preamble() {
        std::map<std::string, double, std::less<>> keys;
        std::string raw;
        while (std::getline(*in_, raw)) {
            ++line_;
            auto line = detail::trim(raw);
            if (line.empty()) continue;
            if (line.front() == '#') {
                line.remove_prefix(1);
                auto eq = line.find('=');
                if (eq == std::string_view::npos) continue; // free-form comment
                auto key = detail::trim(line.substr(0, eq));
                auto value = detail::parse_double(line.substr(eq + 1));
                if (!value) throw data_error(fmt::format("trace: bad value for '{}'", key), line_);
                keys[std::string(key)] = *value;
                continue;
            }
            auto cols = detail::split_commas(line);
            if (cols.size() == 2 && cols[0] == "t_s" && cols[1] == "vs_v") {
                header_.has_trigger = false;
            } else if (cols.size() == 3 && cols[0] == "t_s" && cols[1] == "vs_v" && cols[2] == "trig_v") {
                header_.has_trigger = true;
            } else {
                throw data_error("trace: expected header 't_s,vs_v' or 't_s,vs_v,trig_v'", line_);
            }
            auto need = [&](std::string_view k) {
                auto it = keys.find(k);
                if (it == keys.end()) throw data_error(fmt::format("trace: missing '# {}=' preamble entry", k), line_);
                return it->second;
            };
            header_.rate_hz = need("rate_hz");
            if (!(header_.rate_hz > 0.0) || !std::isfinite(header_.rate_hz))
                throw data_error("trace: non-positive rate", line_);
            try {
                header_.shunt = ShuntConfig(need("vf"), need("rs"));
            } catch (const argument_error& e) {
                throw data_error(e.what(), line_);
            }
            return;
        }
        throw data_error("trace: missing column header", line_);
    }

    PowerSample parse_row(std::string_view line) {
        auto cols = detail::split_commas(line);
        const std::size_t expected = header_.has_trigger ? 3 : 2;
        if (cols.size() != expected)
            throw data_error(fmt::format("trace: expected {} columns, got {}", expected, cols.size()), line_);
        auto t = detail::parse_double(cols[0]);
        auto vs = detail::parse_double(cols[1]);
        if (!t || !vs) throw data_error("trace: malformed number", line_);
        const double expected_t = static_cast<double>(index_) / header_.rate_hz;
        if (std::abs(*t - expected_t) > kTimestampTolerance)
            throw data_error(fmt::format("trace: t_s={} but sample {} is due at {}", *t, index_, expected_t), line_);
        if (!std::isfinite(*vs)) throw data_error("trace: non-finite vs", line_);
        PowerSample s{index_, *vs, std::nullopt};
        if (header_.has_trigger) {
            auto trig = detail::parse_double(cols[2]);
            if (!trig || !std::isfinite(*trig)) throw data_error("trace: malformed trig value", line_);
            s.trig = *trig;
        }
        ++index_;
        return s;
    }

    std::istream* in_;
    TraceHeader header_;
    std::size_t line_ = 0;
    std::size_t index_ = 0;
};

inline PowerTrace read_trace_csv(std::istream& in) {
    TraceCsvReader reader(in);
    const auto& h = reader.header();
    PowerTrace trace(h.rate_hz, h.shunt, h.has_trigger);
    while (auto s = reader.next()) trace.push_back(*s);
    return trace;
}

inline PowerTrace read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(fmt::format("trace: cannot open '{}'", path));
    return read_trace_csv(in);
}

inline void write_trace_header(std::ostream& out, const TraceHeader& h) {
    fmt::print(out, "# rate_hz={}\n# vf={}\n# rs={}\n", h.rate_hz, h.shunt.vf(), h.shunt.rs());
    out << (h.has_trigger ? "t_s,vs_v,trig_v\n" : "t_s,vs_v\n");
}

inline void write_trace_row(std::ostream& out, const PowerSample& s, double rate_hz) {
    const double t = static_cast<double>(s.index) / rate_hz;
    if (s.trig)
        fmt::print(out, "{},{},{}\n", t, s.vs, *s.trig);
    else
        fmt::print(out, "{},{}\n", t, s.vs);
}

inline void write_trace_csv(std::ostream& out, const PowerTrace& trace) {
    write_trace_header(out, {trace.rate_hz(), trace.shunt(), trace.has_trigger()});
    fmt::memory_buffer buf;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double t = static_cast<double>(i) / trace.rate_hz();
        if (trace.has_trigger())
            fmt::format_to(std::back_inserter(buf), "{},{},{}\n", t, trace.vs()[i], trace.trig()[i]);
        else
            fmt::format_to(std::back_inserter(buf), "{},{}\n", t, trace.vs()[i]);
        if (buf.size() > (1u << 16)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void write_trace_csv(const std::string& path, const PowerTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error(fmt::format("trace: cannot write '{}'", path));
    write_trace_csv(out, trace);
}

} // namespace shuntlab
