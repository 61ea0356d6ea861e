#pragma once

// RunLog CSV, schema v1:
//
//   # feedback-urn v1
//   # scenario=<name> engine=<urn|sepp> labels=<A,B,...> true_ratio=<x>
//   rep,day,deployed,frac_or_prob,rate_0,...,disc_0,...,rep_0,...,accepted
//
// One row per (rep, day); rep is 0-based, day runs 1..horizon. For the urn
// engine frac_or_prob and rate_i are mass fractions after the day; for the
// sepp engine they are the deployment probability and predicted rates.

#include <map>
#include <string>
#include <vector>

#include "feedback/deployment.hpp"

namespace feedback {

inline constexpr const char* kRunLogVersionLine = "# feedback-urn v1";

std::vector<std::string> runlog_columns(std::size_t regions);

struct RunLogMeta {
  std::string engine;  // "urn" or "sepp"
  double true_ratio = 0.0;
};

RunLogMeta meta_for(const ScenarioConfig& cfg);

std::string format_runlog(const RunLog& log, const RunLogMeta& meta);
void write_runlog(const std::string& path, const RunLog& log, const RunLogMeta& meta);

struct LoadedRunLog {
  RunLog log;
  std::map<std::string, std::string> meta;  // key=value pairs from the metadata line
};

// Raises SchemaMismatch naming the offending column, Io when unreadable.
LoadedRunLog parse_runlog(const std::string& text, const std::string& source = "<string>");
LoadedRunLog read_runlog(const std::string& path);

}  // namespace feedback
