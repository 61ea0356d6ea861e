#pragma once

// Experiment files. Grammar (TOML):
//
//   output_dir = "path"          optional
//   plots = true                 optional, default true
//   [defaults]                   optional; any scenario key except name and check
//   [[scenario]]                 one or more
//   name = "id"                  required, [A-Za-z0-9_.-]
//   engine = "urn" | "sepp"
//   regions = ["A", "B"]         required (here or in defaults)
//   priors = [609, 379]          ball-equivalents
//   rates = [3.69, 2.82]         true incidents per day
//   incident_mode = "discovered" | "mixed"
//   w_d = 0.5, w_r = 0.5         mixed incident weights
//   correction = "none" | "discovered_rejection" | "mixed_rejection"
//   gating = "batch" | "per_incident"
//   horizon_days, reps, master_seed
//   decay = 0.01, decay_mode = "multiplicative" | "per_ball_binomial"     urn only
//   training_window_days, warmup_days, em_max_iters, em_rel_tolerance,
//   em_abs_tolerance, em_theta0, em_omega0, em_warm_start                 sepp only
//   [scenario.check]             optional golden check on the terminal median
//   target = 0.567 | "true_ratio" | "mixed_limit",  tolerance = 0.02
//   above = 0.95                 median must exceed this
//   displaced = 0.02             median must differ from the true ratio by more
//   iqr_vs = "other", iqr_factor = 3     IQR must be at least factor x the other's
//
// Unknown keys anywhere are errors.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "feedback/deployment.hpp"

namespace feedback {

struct TrueRatioTarget {
  bool operator==(const TrueRatioTarget&) const = default;
};
struct MixedLimitTarget {
  bool operator==(const MixedLimitTarget&) const = default;
};
using TargetSpec = std::variant<double, TrueRatioTarget, MixedLimitTarget>;

struct CheckSpec {
  std::optional<TargetSpec> target;
  std::optional<double> tolerance;
  std::optional<double> above;
  std::optional<double> displaced;
  std::optional<std::string> iqr_vs;
  std::optional<double> iqr_factor;

  bool operator==(const CheckSpec&) const = default;
};

struct ScenarioEntry {
  ScenarioConfig config;
  std::optional<CheckSpec> check;

  bool operator==(const ScenarioEntry&) const = default;
};

struct ConfigFile {
  std::optional<std::string> output_dir;
  bool plots = true;
  std::vector<ScenarioEntry> scenarios;

  const ScenarioEntry* find(const std::string& name) const;
  bool operator==(const ConfigFile&) const = default;
};

// Errors carry ErrorKind::Config and name the offending key.
ConfigFile parse_config(const std::string& text, const std::string& source = "<string>");
ConfigFile load_config(const std::string& path);

// Fully expanded form (no defaults table) that parses back to an equal ConfigFile.
std::string serialize_config(const ConfigFile& config);

// Numeric value of a check target for a scenario.
double resolve_target(const TargetSpec& target, const ScenarioConfig& cfg);

}  // namespace feedback
