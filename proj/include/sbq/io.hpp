#pragma once

#include <map>
#include <string>
#include <vector>

#include "sbq/protocol.hpp"

namespace sbq {

inline constexpr const char* kToolVersion = "sbqlab 1.0.0";

// flat key=value configuration ('#' comments); unknown keys, bad values and
// missing required fields are reported with the offending key path
ProtocolConfig parse_config_text(const std::string& text);
ProtocolConfig parse_config(const std::string& path);

// full echo with defaults filled; parse_config_text(config_text(c)) == c
std::string config_text(const ProtocolConfig& config);

// fixed 17-significant-digit decimal so emitted files are byte-stable
std::string format_number(double x);

std::string sha256_hex(const std::string& bytes);

std::string series_csv(const TimeSeries& series);
std::string histogram_csv(const MagnetizationHistogram& histogram);
std::string gge_json(const ExperimentResult& result);

// writes series.csv [, hist.csv][, gge.json] and manifest.json (last, with
// the digests of the other files); returns the emitted paths
std::vector<std::string> emit_results(const ExperimentResult& result,
                                      const ProtocolConfig& config,
                                      const std::string& out_dir);

}  // namespace sbq
