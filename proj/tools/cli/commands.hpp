#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shuntlab/report.hpp"

namespace shuntlab::cli {

enum exit_code : int { ok = 0, usage = 1, data = 2 };

struct SimulateArgs {
    std::string scenario_path;
    std::string out_trace_path;
    std::string out_truth_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> rate_hz; // aggregate DAQ rate override
};

struct AnalyzeArgs {
    std::string trace_path; // "-" reads the trace from standard input
    Mode mode = Mode::relay;
    std::optional<double> shunt_r;
    std::optional<double> vf;
    SegmentationParams params;
    std::optional<std::string> expected_path;
    double tolerance_s = kDefaultMatchTolerance_s;
    std::string out_report_path;
    std::optional<std::string> skyline_path; // default: <report>.skyline.csv
    std::optional<std::string> windows_path;
};

struct CampaignArgs {
    std::string scenario_path;
    int runs = 5;
    std::string out_path;
    std::optional<std::string> json_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> rate_hz;
    double confidence = 0.95;
    unsigned jobs = 0; // 0: hardware concurrency
};

struct StatsArgs {
    std::vector<double> samples;
    std::optional<std::string> in_path; // one value per line
    double confidence = 0.95;
    std::optional<std::string> out_path;
};

struct ValidateArgs {
    std::string path;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err);
int cmd_campaign(const CampaignArgs& a, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsArgs& a, std::ostream& out, std::ostream& err);
int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err);

// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace shuntlab::cli
