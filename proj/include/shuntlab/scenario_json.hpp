#pragma once

// JSON form of simulator scenarios and ground truth. Schema:
//
// {
//   "duration_s": 3.0,                         required
//   "circuit": "relay" | "trigger",            required
//   "seed": 42,                                required, unsigned integer
//   "acquisition": {"aggregate_rate_hz": 40000, "channels": 1},
//   "shunt": {"vf": 12.0, "rs": 0.1},
//   "workload": [{"start_s": 0, "end_s": 3, "shape": "constant", "watts": 12}, ...],
//   "gpio": [{"t_s": 1.0, "port": 40, "action": "activate"}, ...]  or  "gpio_log": "log.csv",
//   "port": 40,
//   "relay_model": {"nominal_latency_s": 5e-4, "full_confidence_s": 4.2391e-4, "floor_hit_prob": 0.3},
//   "noise": {"idle_power_bound_w": 0.001, "distribution": "uniform"},
//   "logic": {"high_v": 1.8, "threshold_v": 0.9}
// }

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "daq_sim.hpp"
#include "error.hpp"
#include "gpio_log.hpp"
#include "workload.hpp"

namespace shuntlab {

using json = nlohmann::json;

namespace detail {

class JsonReader {
public:
    explicit JsonReader(std::string path) : path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& msg) const { throw data_error(fmt::format("{}: {}", path_, msg)); }

    const json& field(const json& obj, const std::string& key, bool required, const std::string& where) const {
        static const json null_value;
        if (!obj.is_object()) fail(where + " must be an object");
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) fail(fmt::format("{}.{} is required", where, key));
            return null_value;
        }
        return *it;
    }

    double number(const json& v, const std::string& where) const {
        if (!v.is_number()) fail(where + " must be a number");
        return v.get<double>();
    }

    std::optional<double> opt_number(const json& obj, const std::string& key, const std::string& where) const {
        const auto& v = field(obj, key, false, where);
        if (v.is_null()) return std::nullopt;
        return number(v, where + "." + key);
    }

    std::int64_t integer(const json& v, const std::string& where) const {
        if (!v.is_number_integer()) fail(where + " must be an integer");
        return v.get<std::int64_t>();
    }

    std::string string(const json& v, const std::string& where) const {
        if (!v.is_string()) fail(where + " must be a string");
        return v.get<std::string>();
    }

private:
    std::string path_;
};

inline WorkloadSegment segment_from_json(const JsonReader& r, const json& j, const std::string& at) {
    WorkloadSegment seg;
    seg.start_s = r.number(r.field(j, "start_s", true, at), at + ".start_s");
    seg.end_s = r.number(r.field(j, "end_s", true, at), at + ".end_s");
    const auto shape = r.string(r.field(j, "shape", true, at), at + ".shape");
    auto num = [&](const char* k) { return r.number(r.field(j, k, true, at), at + "." + k); };
    if (shape == "constant") seg.shape = ConstantShape{num("watts")};
    else if (shape == "ramp") seg.shape = RampShape{num("w0"), num("w1")};
    else if (shape == "spiky") seg.shape = SpikyShape{num("base_w"), num("peak_w"), num("period_s")};
    else r.fail(at + ".shape must be one of constant, ramp, spiky");
    return seg;
}

} // namespace detail

// `base_dir` resolves a relative "gpio_log" path.
inline Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
    detail::JsonReader r("$");
    Scenario s;
    s.duration_s = r.number(r.field(j, "duration_s", true, "$"), "$.duration_s");

    const auto circuit = r.string(r.field(j, "circuit", true, "$"), "$.circuit");
    if (circuit == "relay") s.circuit = Circuit::relay;
    else if (circuit == "trigger") s.circuit = Circuit::trigger;
    else r.fail("$.circuit must be 'relay' or 'trigger'");

    const auto& seed = r.field(j, "seed", true, "$");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
        r.fail("$.seed must be a non-negative integer");
    s.seed = seed.get<std::uint64_t>();

    s.config = AcquisitionConfig{40000.0, s.circuit == Circuit::relay ? 1 : 2, {}};
    if (const auto& acq = r.field(j, "acquisition", false, "$"); !acq.is_null()) {
        if (auto v = r.opt_number(acq, "aggregate_rate_hz", "$.acquisition")) s.config.aggregate_rate_hz = *v;
        if (const auto& ch = r.field(acq, "channels", false, "$.acquisition"); !ch.is_null())
            s.config.channels = static_cast<int>(r.integer(ch, "$.acquisition.channels"));
    }

    if (const auto& sh = r.field(j, "shunt", false, "$"); !sh.is_null()) {
        try {
            s.shunt = ShuntConfig(r.opt_number(sh, "vf", "$.shunt").value_or(12.0),
                                  r.opt_number(sh, "rs", "$.shunt").value_or(0.1));
        } catch (const argument_error& e) {
            r.fail(std::string("$.shunt: ") + e.what());
        }
    }

    std::vector<WorkloadSegment> segs;
    const auto& wl = r.field(j, "workload", true, "$");
    if (!wl.is_array()) r.fail("$.workload must be an array");
    for (std::size_t i = 0; i < wl.size(); ++i)
        segs.push_back(detail::segment_from_json(r, wl[i], fmt::format("$.workload[{}]", i)));
    s.workload = WorkloadProfile(std::move(segs));

    const auto& gpio = r.field(j, "gpio", false, "$");
    const auto& gpio_path = r.field(j, "gpio_log", false, "$");
    if (!gpio.is_null() && !gpio_path.is_null()) r.fail("$: give either gpio or gpio_log, not both");
    if (!gpio.is_null()) {
        if (!gpio.is_array()) r.fail("$.gpio must be an array");
        for (std::size_t i = 0; i < gpio.size(); ++i) {
            const auto at = fmt::format("$.gpio[{}]", i);
            GpioCommand c;
            c.t_s = r.number(r.field(gpio[i], "t_s", true, at), at + ".t_s");
            c.port = static_cast<int>(r.integer(r.field(gpio[i], "port", true, at), at + ".port"));
            auto a = parse_action(r.string(r.field(gpio[i], "action", true, at), at + ".action"));
            if (!a) r.fail(at + ".action must be 'activate' or 'deactivate'");
            c.action = *a;
            s.gpio.push_back(c);
        }
    } else if (!gpio_path.is_null()) {
        std::filesystem::path p = r.string(gpio_path, "$.gpio_log");
        if (p.is_relative()) p = base_dir / p;
        s.gpio = read_gpio_log_csv(p.string());
    }

    if (const auto& port = r.field(j, "port", false, "$"); !port.is_null())
        s.port = static_cast<int>(r.integer(port, "$.port"));

    s.relay_model = RelayModel::defaults_for(s.circuit);
    if (const auto& rm = r.field(j, "relay_model", false, "$"); !rm.is_null()) {
        if (auto v = r.opt_number(rm, "nominal_latency_s", "$.relay_model")) s.relay_model.nominal_latency_s = *v;
        if (auto v = r.opt_number(rm, "full_confidence_s", "$.relay_model")) s.relay_model.full_confidence_s = *v;
        if (auto v = r.opt_number(rm, "floor_hit_prob", "$.relay_model")) s.relay_model.floor_hit_prob = *v;
    }

    if (const auto& nz = r.field(j, "noise", false, "$"); !nz.is_null()) {
        if (auto v = r.opt_number(nz, "idle_power_bound_w", "$.noise")) s.noise.idle_power_bound_w = *v;
        if (const auto& d = r.field(nz, "distribution", false, "$.noise"); !d.is_null())
            if (r.string(d, "$.noise.distribution") != "uniform") r.fail("$.noise.distribution must be 'uniform'");
    }

    if (const auto& lg = r.field(j, "logic", false, "$"); !lg.is_null()) {
        if (auto v = r.opt_number(lg, "high_v", "$.logic")) s.logic.high_v = *v;
        if (auto v = r.opt_number(lg, "threshold_v", "$.logic")) s.logic.threshold_v = *v;
    }
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(fmt::format("scenario: cannot open '{}'", path));
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw data_error(fmt::format("scenario: invalid JSON in '{}': {}", path, e.what()));
    }
    return scenario_from_json(j, std::filesystem::path(path).parent_path());
}

inline json to_json(const WorkloadSegment& seg) {
    json j{{"start_s", seg.start_s}, {"end_s", seg.end_s}};
    std::visit(
        [&](const auto& sh) {
            using T = std::decay_t<decltype(sh)>;
            if constexpr (std::is_same_v<T, ConstantShape>) {
                j["shape"] = "constant";
                j["watts"] = sh.watts;
            } else if constexpr (std::is_same_v<T, RampShape>) {
                j["shape"] = "ramp";
                j["w0"] = sh.w0;
                j["w1"] = sh.w1;
            } else {
                j["shape"] = "spiky";
                j["base_w"] = sh.base_w;
                j["peak_w"] = sh.peak_w;
                j["period_s"] = sh.period_s;
            }
        },
        seg.shape);
    return j;
}

inline json to_json(const Scenario& s) {
    json wl = json::array();
    for (const auto& seg : s.workload.segments()) wl.push_back(to_json(seg));
    json gpio = json::array();
    for (const auto& c : s.gpio) gpio.push_back({{"t_s", c.t_s}, {"port", c.port}, {"action", to_string(c.action)}});
    json j{
        {"duration_s", s.duration_s},
        {"circuit", to_string(s.circuit)},
        {"seed", s.seed},
        {"acquisition", {{"aggregate_rate_hz", s.config.aggregate_rate_hz}, {"channels", s.config.channels}}},
        {"shunt", {{"vf", s.shunt.vf()}, {"rs", s.shunt.rs()}}},
        {"workload", wl},
        {"gpio", gpio},
        {"relay_model",
         {{"nominal_latency_s", s.relay_model.nominal_latency_s},
          {"full_confidence_s", s.relay_model.full_confidence_s},
          {"floor_hit_prob", s.relay_model.floor_hit_prob}}},
        {"noise", {{"idle_power_bound_w", s.noise.idle_power_bound_w}, {"distribution", "uniform"}}},
        {"logic", {{"high_v", s.logic.high_v}, {"threshold_v", s.logic.threshold_v}}},
    };
    if (s.port) j["port"] = *s.port;
    return j;
}

inline json to_json(const GroundTruth& t) {
    json windows = json::array();
    for (const auto& w : t.windows) {
        json jw{{"port", w.port},
                {"intended_begin_s", w.intended_begin_s},
                {"intended_end_s", w.intended_end_s},
                {"hit", w.hit()},
                {"true_energy_j", w.true_energy_j}};
        if (w.realized) {
            jw["realized_begin_idx"] = w.realized->begin;
            jw["realized_end_idx"] = w.realized->end;
        } else {
            jw["realized_begin_idx"] = nullptr;
            jw["realized_end_idx"] = nullptr;
        }
        windows.push_back(jw);
    }
    return {{"seed", t.seed}, {"rate_hz", t.rate_hz}, {"samples", t.samples}, {"windows", windows}};
}

inline GroundTruth truth_from_json(const json& j) {
    GroundTruth t;
    t.seed = j.at("seed").get<std::uint64_t>();
    t.rate_hz = j.at("rate_hz").get<double>();
    t.samples = j.at("samples").get<std::size_t>();
    for (const auto& jw : j.at("windows")) {
        TruthWindow w;
        w.port = jw.at("port").get<int>();
        w.intended_begin_s = jw.at("intended_begin_s").get<double>();
        w.intended_end_s = jw.at("intended_end_s").get<double>();
        w.true_energy_j = jw.at("true_energy_j").get<double>();
        if (!jw.at("realized_begin_idx").is_null())
            w.realized = MeasurementWindow{jw.at("realized_begin_idx").get<std::size_t>(),
                                           jw.at("realized_end_idx").get<std::size_t>()};
        t.windows.push_back(w);
    }
    return t;
}

// Commands of the ground-truth windows, as a GPIO log (useful as --expected).
inline GpioCommandLog truth_to_gpio_log(const GroundTruth& t) {
    GpioCommandLog log;
    for (const auto& w : t.windows) {
        log.push_back({w.intended_begin_s, w.port, GpioAction::activate});
        log.push_back({w.intended_end_s, w.port, GpioAction::deactivate});
    }
    return log;
}

} // namespace shuntlab
