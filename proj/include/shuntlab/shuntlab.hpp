#pragma once

#include "acquisition.hpp"
#include "daq_sim.hpp"
#include "energy.hpp"
#include "error.hpp"
#include "gpio_log.hpp"
#include "instrument.hpp"
#include "report.hpp"
#include "scenario_json.hpp"
#include "segmentation.hpp"
#include "source.hpp"
#include "stats.hpp"
#include "trace.hpp"
#include "trace_csv.hpp"
#include "workload.hpp"
