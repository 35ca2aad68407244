#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "shuntlab/shuntlab.hpp"

namespace shuntlab::cli {

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error(fmt::format("cannot write '{}'", path));
    f << text;
    if (!f) throw data_error(fmt::format("write to '{}' failed", path));
}

Scenario load_with_overrides(const std::string& path, std::optional<std::uint64_t> seed, std::optional<double> rate) {
    Scenario s = load_scenario(path);
    if (seed) s.seed = *seed;
    if (rate) s.config.aggregate_rate_hz = *rate;
    return s;
}

// Runs `body`, mapping library exceptions to exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const argument_error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return usage;
    } catch (const insufficient_samples_error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return usage;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return data;
    }
}

std::string default_skyline_path(const std::string& report) {
    std::filesystem::path p(report);
    return (p.parent_path() / (p.stem().string() + ".skyline.csv")).string();
}

} // namespace

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Scenario s = load_with_overrides(a.scenario_path, a.seed, a.rate_hz);
        if (auto errs = validate_scenario(s); !errs.empty()) {
            for (const auto& e : errs) fmt::print(err, "error: {}: {}\n", a.scenario_path, e);
            return static_cast<int>(data);
        }
        const auto result = simulate_session(s);
        write_trace_csv(a.out_trace_path, result.trace);
        write_text(a.out_truth_path, to_json(result.truth).dump(2) + "\n");
        std::size_t hits = 0;
        for (const auto& w : result.truth.windows) hits += w.hit();
        fmt::print(out, "simulated {} samples at {} Hz ({} circuit), {} of {} windows realized\n",
                   result.trace.size(), result.trace.rate_hz(), to_string(s.circuit), hits,
                   result.truth.windows.size());
        return static_cast<int>(ok);
    });
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        AcquisitionConfig cfg;
        cfg.channels = a.mode == Mode::relay ? 1 : 2;
        if (a.trace_path == "-") cfg.source = StreamSource{&std::cin};
        else cfg.source = ReplaySource{a.trace_path};
        SampleStream stream = open_source(cfg);
        const PowerTrace trace = collect(stream);

        AnalysisOptions opt;
        opt.mode = a.mode;
        opt.params = a.params;
        opt.match_tolerance_s = a.tolerance_s;
        if (a.shunt_r || a.vf)
            opt.shunt = ShuntConfig(a.vf.value_or(trace.shunt().vf()), a.shunt_r.value_or(trace.shunt().rs()));
        if (a.expected_path) opt.expected = read_gpio_log_csv(*a.expected_path);

        const SessionReport rep = analyze_trace(trace, opt);
        write_text(a.out_report_path, to_json(rep).dump(2) + "\n");

        const std::string sky = a.skyline_path.value_or(default_skyline_path(a.out_report_path));
        {
            std::ofstream f(sky, std::ios::binary);
            if (!f) throw data_error(fmt::format("cannot write '{}'", sky));
            write_skyline_csv(f, trace, rep.shunt);
        }
        if (a.windows_path) {
            std::ofstream f(*a.windows_path, std::ios::binary);
            if (!f) throw data_error(fmt::format("cannot write '{}'", *a.windows_path));
            write_windows_csv(f, rep.windows, rep.rate_hz);
        }

        for (const auto& w : rep.warnings) fmt::print(err, "warning: {}\n", w);
        fmt::print(out, "{} window(s), {:.6f} J total\n", rep.results.size(), rep.total_joules());
        if (rep.hit_miss)
            fmt::print(out, "hits {} / misses {} of {} expected\n", rep.hit_miss->hits, rep.hit_miss->misses,
                       rep.hit_miss->expected);
        return static_cast<int>(ok);
    });
}

int cmd_campaign(const CampaignArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (a.runs < 2)
            throw insufficient_samples_error(fmt::format("campaign: need at least 2 runs, got {}", a.runs));
        const Scenario base = load_with_overrides(a.scenario_path, a.seed, a.rate_hz);
        if (auto errs = validate_scenario(base); !errs.empty()) throw data_error("scenario: " + errs.front());

        const auto n = static_cast<std::size_t>(a.runs);
        std::vector<double> joules(n);
        std::vector<std::string> warnings(n);
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mu;

        auto worker = [&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    Scenario s = base;
                    s.seed = derive_seed(base.seed, i);
                    const auto sim = simulate_session(s);
                    AnalysisOptions opt;
                    opt.mode = s.circuit == Circuit::relay ? Mode::relay : Mode::trigger;
                    const auto rep = analyze_trace(sim.trace, opt);
                    joules[i] = rep.total_joules();
                    if (rep.results.empty()) warnings[i] = fmt::format("run {}: no windows found", i);
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        };
        unsigned jobs = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
        jobs = std::min<unsigned>(jobs, static_cast<unsigned>(n));
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);

        for (const auto& w : warnings)
            if (!w.empty()) fmt::print(err, "warning: {}\n", w);

        const CampaignSummary summary = summarize_campaign(joules, a.confidence);
        write_text(a.out_path, campaign_csv_header(summary) + "\n" + campaign_csv_row(summary) + "\n");
        nlohmann::json j = to_json(summary);
        j["scenario"] = to_json(base);
        j["run_seeds"] = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) j["run_seeds"].push_back(derive_seed(base.seed, i));
        if (a.json_path) write_text(*a.json_path, j.dump(2) + "\n");
        fmt::print(out, "{}\n", campaign_csv_row(summary));
        return static_cast<int>(ok);
    });
}

int cmd_stats(const StatsArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::vector<double> xs = a.samples;
        if (a.in_path) {
            std::ifstream in(*a.in_path);
            if (!in) throw data_error(fmt::format("cannot open '{}'", *a.in_path));
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                auto t = detail::trim(line);
                if (t.empty() || t.front() == '#') continue;
                for (auto field : detail::split_commas(t)) {
                    auto v = detail::parse_double(field);
                    if (!v) throw data_error("stats: malformed number", line_no);
                    xs.push_back(*v);
                }
            }
        }
        const CampaignSummary s = summarize_campaign(xs, a.confidence);
        const std::string csv = campaign_csv_header(s) + "\n" + campaign_csv_row(s) + "\n";
        if (a.out_path) write_text(*a.out_path, to_json(s).dump(2) + "\n");
        out << csv;
        fmt::print(out, "mean {} ME {} (sd {:.6g}, {}% CI [{:.6g}, {:.6g}])\n", display5(s.mean_j), display5(s.me_j),
                   s.sd_j, s.confidence * 100.0, s.ci_low, s.ci_high);
        return static_cast<int>(ok);
    });
}

int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const std::filesystem::path p(a.path);
        if (p.extension() == ".json") {
            const Scenario s = load_scenario(a.path);
            const auto errs = validate_scenario(s);
            for (const auto& e : errs) fmt::print(err, "{}: {}\n", a.path, e);
            if (!errs.empty()) return static_cast<int>(data);
            fmt::print(out, "{}: valid scenario ({} circuit, {} s, {} gpio commands)\n", a.path, to_string(s.circuit),
                       s.duration_s, s.gpio.size());
            return static_cast<int>(ok);
        }

        std::ifstream in(a.path);
        if (!in) throw data_error(fmt::format("cannot open '{}'", a.path));
        std::string first;
        while (std::getline(in, first)) {
            auto t = detail::trim(first);
            if (!t.empty() && t.front() != '#') break;
        }
        in.clear();
        in.seekg(0);
        if (detail::trim(first) == "t_s,port,action") {
            const auto log = read_gpio_log_csv(in);
            const auto v = check_alternation(log);
            for (const auto& e : v) fmt::print(err, "{}: {}\n", a.path, e.message);
            if (!v.empty()) return static_cast<int>(data);
            fmt::print(out, "{}: valid gpio log ({} commands)\n", a.path, log.size());
            return static_cast<int>(ok);
        }
        const PowerTrace trace = read_trace_csv(in);
        const auto v = validate_trace(trace);
        for (const auto& e : v.violations) fmt::print(err, "{}: {}\n", a.path, e.message);
        if (!v.ok()) return static_cast<int>(data);
        fmt::print(out, "{}: valid trace ({} samples at {} Hz, {} channel(s))\n", a.path, trace.size(), trace.rate_hz(),
                   trace.has_trigger() ? 2 : 1);
        return static_cast<int>(ok);
    });
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"shunt-resistor energy measurement: simulate, analyze and summarize power traces"};
    app.require_subcommand(1);


    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "synthesize a trace and ground truth from a scenario");
    simulate->add_option("scenario", sim.scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", sim.out_trace_path, "output trace CSV")->required();
    simulate->add_option("--truth", sim.out_truth_path, "output ground-truth JSON")->required();
    simulate->add_option("--seed", sim.seed, "override the scenario seed");
    simulate->add_option("--rate", sim.rate_hz, "override the aggregate DAQ rate (Hz)")->check(CLI::PositiveNumber);

    AnalyzeArgs an;
    std::optional<std::size_t> min_window;
    auto* analyze = app.add_subcommand("analyze", "segment a trace and integrate each window");
    analyze->add_option("trace", an.trace_path, "trace CSV, or - for standard input")->required();
    std::string mode_name;
    analyze->add_option("--mode", mode_name, "relay | trigger")
        ->required()
        ->check(CLI::IsMember({"relay", "trigger"}, CLI::ignore_case));
    analyze->add_option("--out", an.out_report_path, "output report JSON")->required();
    analyze->add_option("--shunt-r", an.shunt_r, "shunt resistance (ohm)")->check(CLI::PositiveNumber);
    analyze->add_option("--vf", an.vf, "supply voltage (V)")->check(CLI::PositiveNumber);
    analyze->add_option("--expected", an.expected_path, "GPIO command log to score hits and misses")
        ->check(CLI::ExistingFile);
    analyze->add_option("--tolerance", an.tolerance_s, "hit matching tolerance (s)");
    analyze->add_option("--relay-threshold", an.params.relay_threshold_w, "relay-mode power threshold (W)");
    analyze->add_option("--min-window", min_window, "minimum window length (samples)")->check(CLI::PositiveNumber);
    analyze->add_option("--logic-threshold", an.params.trigger_logic_threshold_v, "trigger logic threshold (V)");
    analyze->add_option("--skyline", an.skyline_path, "skyline CSV (default: <report>.skyline.csv)");
    analyze->add_option("--windows", an.windows_path, "windows CSV");

    CampaignArgs camp;
    auto* campaign = app.add_subcommand("campaign", "repeat simulate+analyze and summarize the energies");
    campaign->add_option("scenario", camp.scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
    campaign->add_option("--runs,-n", camp.runs, "number of runs")->capture_default_str();
    campaign->add_option("--out", camp.out_path, "output CSV row")->required();
    campaign->add_option("--json", camp.json_path, "output summary JSON");
    campaign->add_option("--seed", camp.seed, "override the base seed");
    campaign->add_option("--rate", camp.rate_hz, "override the aggregate DAQ rate (Hz)")->check(CLI::PositiveNumber);
    campaign->add_option("--confidence", camp.confidence, "confidence level (0.90, 0.95, 0.99)")->capture_default_str();
    campaign->add_option("--jobs,-j", camp.jobs, "parallel workers (0: all cores)");

    StatsArgs st;
    auto* stats = app.add_subcommand("stats", "summarize repeated energy measurements");
    stats->add_option("samples", st.samples, "joules");
    stats->add_option("--in", st.in_path, "file with one or more values per line")->check(CLI::ExistingFile);
    stats->add_option("--confidence", st.confidence, "confidence level (0.90, 0.95, 0.99)")->capture_default_str();
    stats->add_option("--out", st.out_path, "output summary JSON");

    ValidateArgs val;
    auto* validate = app.add_subcommand("validate", "lint a trace CSV, GPIO log CSV or scenario JSON");
    validate->add_option("file", val.path)->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << e.what() << "\n";
            return ok;
        }
        fmt::print(err, "error: {}\n", e.what());
        return usage;
    }

    if (*simulate) return cmd_simulate(sim, out, err);
    if (*analyze) {
        if (min_window) an.params.min_window_samples = *min_window;
        an.mode = CLI::detail::to_lower(mode_name) == "trigger" ? Mode::trigger : Mode::relay;
        return cmd_analyze(an, out, err);
    }
    if (*campaign) return cmd_campaign(camp, out, err);
    if (*stats) return cmd_stats(st, out, err);
    if (*validate) return cmd_validate(val, out, err);
    return usage;
}

} // namespace shuntlab::cli
