#pragma once

// Analysis pipeline (segment, then integrate each window) and its report
// formats.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "energy.hpp"
#include "gpio_log.hpp"
#include "segmentation.hpp"
#include "stats.hpp"
#include "trace.hpp"

namespace shuntlab {

enum class Mode { relay, trigger };

inline std::string_view to_string(Mode m) noexcept { return m == Mode::relay ? "relay" : "trigger"; }

struct AnalysisOptions {
    Mode mode = Mode::relay;
    SegmentationParams params;
    std::optional<ShuntConfig> shunt; // overrides the trace's own
    std::optional<GpioCommandLog> expected;
    double match_tolerance_s = kDefaultMatchTolerance_s;
};

struct SessionReport {
    Mode mode = Mode::relay;
    double rate_hz = 0.0;
    std::size_t samples = 0;
    ShuntConfig shunt;
    SegmentationParams params;
    double match_tolerance_s = kDefaultMatchTolerance_s;
    std::vector<MeasurementWindow> windows; // segmentation output
    std::vector<EnergyResult> results;
    std::vector<std::string> warnings;
    std::optional<HitMissReport> hit_miss;
    std::optional<CampaignSummary> campaign;

    double total_joules() const {
        double e = 0.0;
        for (const auto& r : results) e += r.joules;
        return e;
    }
};

inline SessionReport analyze_trace(const PowerTrace& trace, const AnalysisOptions& opt) {
    if (auto v = validate_trace(trace); !v.ok()) throw data_error("trace: " + v.violations.front().message);

    SessionReport rep;
    rep.mode = opt.mode;
    rep.rate_hz = trace.rate_hz();
    rep.samples = trace.size();
    rep.shunt = opt.shunt.value_or(trace.shunt());
    rep.params = opt.params;
    rep.match_tolerance_s = opt.match_tolerance_s;

    // Thresholds are in watts, so the analysis shunt must drive segmentation too.
    PowerTrace view = trace;
    if (opt.shunt && !(*opt.shunt == trace.shunt()))
        view = PowerTrace(trace.rate_hz(), *opt.shunt, trace.vs(),
                          trace.has_trigger() ? std::optional(trace.trig()) : std::nullopt);

    const Segmentation seg =
        opt.mode == Mode::relay ? segment_relay(view, opt.params) : segment_trigger(view, opt.params);
    rep.windows = seg.windows;
    if (seg.truncated) rep.warnings.push_back("last window truncated at end of trace");
    if (seg.windows.empty()) rep.warnings.push_back("no measurement windows found");

    for (const auto& w : seg.windows) {
        if (w.size() < 2) {
            rep.warnings.push_back(fmt::format("window [{}, {}) too short to integrate", w.begin, w.end));
            continue;
        }
        rep.results.push_back(integrate_energy(view, w, rep.shunt));
    }
    if (opt.expected) rep.hit_miss = match_toggles(*opt.expected, seg.windows, trace.rate_hz(), opt.match_tolerance_s);
    return rep;
}

inline nlohmann::json to_json(const EnergyResult& r) {
    return {{"begin_s", r.begin_s},
            {"end_s", r.begin_s + r.duration_s},
            {"joules", r.joules},
            {"mean_watts", r.mean_watts},
            {"begin_idx", r.window.begin},
            {"end_idx", r.window.end}};
}

inline nlohmann::json to_json(const HitMissReport& h) {
    nlohmann::json verdicts = nlohmann::json::array();
    for (const auto& v : h.verdicts) {
        nlohmann::json jv{{"intended_begin_s", v.intended_begin_s},
                          {"intended_end_s", v.intended_end_s},
                          {"hit", v.matched.has_value()}};
        jv["window"] = v.matched ? nlohmann::json(*v.matched) : nlohmann::json(nullptr);
        verdicts.push_back(jv);
    }
    return {{"expected", h.expected}, {"hits", h.hits}, {"misses", h.misses}, {"verdicts", verdicts}};
}

inline nlohmann::json to_json(const CampaignSummary& s) {
    return {{"n", s.n},
            {"confidence", s.confidence},
            {"samples_j", s.samples},
            {"mean_j", s.mean_j},
            {"sd_j", s.sd_j},
            {"me_j", s.me_j},
            {"ci", {s.ci_low, s.ci_high}},
            {"variation_pct", s.variation_pct ? nlohmann::json(*s.variation_pct) : nlohmann::json(nullptr)},
            {"display", {{"mean", display5(s.mean_j)}, {"me", display5(s.me_j)}}}};
}

inline nlohmann::json to_json(const SessionReport& r) {
    nlohmann::json results = nlohmann::json::array();
    for (const auto& e : r.results) results.push_back(to_json(e));
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& w : r.windows) windows.push_back({w.begin, w.end});
    nlohmann::json j{
        {"metadata",
         {{"mode", to_string(r.mode)},
          {"circuit", to_string(r.mode)},
          {"rate_hz", r.rate_hz},
          {"samples", r.samples},
          {"shunt", {{"vf", r.shunt.vf()}, {"rs", r.shunt.rs()}}},
          {"params",
           {{"relay_threshold_w", r.params.relay_threshold_w},
            {"min_window_samples", r.params.min_window_samples},
            {"trigger_logic_threshold_v", r.params.trigger_logic_threshold_v},
            {"match_tolerance_s", r.match_tolerance_s}}}}},
        {"windows", windows},
        {"results", results},
        {"total_joules", r.total_joules()},
        {"warnings", r.warnings},
    };
    j["hit_miss"] = r.hit_miss ? to_json(*r.hit_miss) : nlohmann::json(nullptr);
    j["campaign"] = r.campaign ? to_json(*r.campaign) : nlohmann::json(nullptr);
    return j;
}

// begin_idx,end_idx,begin_s,end_s
inline void write_windows_csv(std::ostream& out, const std::vector<MeasurementWindow>& windows, double rate_hz) {
    out << "begin_idx,end_idx,begin_s,end_s\n";
    for (const auto& w : windows)
        fmt::print(out, "{},{},{},{}\n", w.begin, w.end, static_cast<double>(w.begin) / rate_hz,
                   static_cast<double>(w.end) / rate_hz);
}

// Instantaneous power per sample, for plotting the program's power outline.
inline void write_skyline_csv(std::ostream& out, const PowerTrace& trace, const ShuntConfig& shunt) {
    out << "t_s,watts\n";
    fmt::memory_buffer buf;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        fmt::format_to(std::back_inserter(buf), "{},{}\n", trace.time_at(i), sample_to_power(trace.vs()[i], shunt));
        if (buf.size() > (1u << 16)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

} // namespace shuntlab
