#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "feedback/config.hpp"
#include "feedback/deployment.hpp"
#include "feedback/stats.hpp"

namespace feedback {

struct DayBand {
  std::int64_t day = 0;  // 1-based
  Spread spread;
};

// Quartiles of frac_or_prob across replications, per day.
std::vector<DayBand> day_bands(const RunLog& log);

std::string format_bands(const std::vector<DayBand>& bands);

struct PlotSpec {
  std::string title;
  std::string y_label;
  std::optional<double> target;
};

std::string render_band_svg(const std::vector<DayBand>& bands, const PlotSpec& spec);

struct CheckOutcome {
  bool pass = true;
  std::vector<std::string> details;  // one line per evaluated condition
};

// `iqr_of` maps other scenario names to their terminal IQR; a missing entry fails the IQR condition.
CheckOutcome evaluate_check(const CheckSpec& check, const ScenarioConfig& cfg, const Spread& terminal,
                            const std::map<std::string, double>& iqr_of);

struct ScenarioSummary {
  std::string name;
  std::int64_t reps = 0;
  std::int64_t days = 0;
  Spread terminal;
  std::optional<double> target;
  std::optional<CheckOutcome> check;
  double runtime_seconds = 0.0;
  std::int64_t fallbacks = 0;
  std::optional<std::string> error;  // the scenario failed to run
};

std::string format_summary_csv(const std::vector<ScenarioSummary>& rows);
std::string format_summary_table(const std::vector<ScenarioSummary>& rows);

// Writes text to path, raising Io on failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace feedback
