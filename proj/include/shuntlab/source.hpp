#pragma once

#include <fstream>
#include <iostream>
#include <memory>

#include <fmt/format.h>

#include "acquisition.hpp"
#include "daq_sim.hpp"

namespace shuntlab {

// Opens the configured source. Replay and stream sources read the trace CSV
// format; the simulator source runs the scenario in-process.
inline SampleStream open_source(const AcquisitionConfig& config) {
    channel_rate(config); // validates channels and rate
    std::unique_ptr<SampleSource> src;

    if (const auto* replay = std::get_if<ReplaySource>(&config.source)) {
        auto in = std::make_unique<std::ifstream>(replay->path);
        if (!*in) throw data_error(fmt::format("replay: cannot open '{}'", replay->path));
        src = std::make_unique<CsvSource>(std::move(in));
    } else if (const auto* sim = std::get_if<SimulatorSource>(&config.source)) {
        if (!sim->scenario) throw argument_error("simulator source: no scenario");
        if (auto errs = validate_scenario(*sim->scenario); !errs.empty()) throw data_error("scenario: " + errs.front());
        src = std::make_unique<TraceSource>(simulate_session(*sim->scenario).trace);
    } else if (const auto* stream = std::get_if<StreamSource>(&config.source)) {
        src = std::make_unique<CsvSource>(stream->in ? *stream->in : std::cin);
    } else {
        throw argument_error("acquisition: no source configured");
    }

    const int file_channels = src->has_trigger() ? 2 : 1;
    if (file_channels != config.channels)
        throw data_error(fmt::format("acquisition: source has {} channel(s) but config expects {}", file_channels,
                                     config.channels));
    return SampleStream(config, std::move(src));
}

} // namespace shuntlab
