#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pucci/config.hpp"

namespace pucci {

struct RunResult {
    nlohmann::json manifest;
    std::vector<std::string> outputs;  ///< files written, relative to the output directory
    bool pass = true;
};

/// Runs one command and writes its files plus manifest.json into
/// cfg.output. Sets the worker count from cfg.threads first.
///
///   generate    cloud.csv, cloud.json, and with partition.delta set
///               partition.json and histogram.csv
///   solve       solution.csv, report.json
///   experiment  <name>.csv (plus <name>.json for barrier and holder)
RunResult run(const RunConfig& cfg, Command command);

/// `git describe` of the source tree at configure time.
std::string git_describe();

}  // namespace pucci
