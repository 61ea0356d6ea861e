#pragma once

// Closed-loop daily deployment experiments. Each replication draws from its
// own stream derived from (master_seed, rep), so results do not depend on
// how replications are spread over threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "feedback/correction.hpp"
#include "feedback/pointproc.hpp"
#include "feedback/urn.hpp"

namespace feedback {

enum class Engine { Urn, Sepp };
enum class IncidentMode { DiscoveredOnly, Mixed };

struct RegionSpec {
  std::string label;
  double prior = 1.0;  // ball-equivalents of historical incidents
  double rate = 0.0;   // true incidents per day

  bool operator==(const RegionSpec&) const = default;
};

struct ScenarioConfig {
  std::string name;
  std::vector<RegionSpec> regions;
  Engine engine = Engine::Urn;
  IncidentMode incident_mode = IncidentMode::DiscoveredOnly;
  double w_d = 1.0;  // Mixed only
  double w_r = 0.0;
  CorrectionMode correction;
  Gating gating = Gating::Batch;
  std::int64_t horizon_days = 1000;
  std::int64_t reps = 1000;
  std::uint64_t master_seed = 1;

  DecayPolicy decay;  // Urn only

  std::int64_t training_window_days = 180;  // Sepp only
  std::int64_t warmup_days = 180;
  EmConfig em;
  bool em_warm_start = false;

  void validate() const;
  std::size_t region_count() const { return regions.size(); }
  // lambda_0 / sum_r lambda_r: the deployment share of region 0 under effective policing.
  double true_ratio() const;

  bool operator==(const ScenarioConfig&) const = default;
};

// One row per (rep, day); per-region columns are stored flat, rep-major.
class RunLog {
 public:
  RunLog() = default;
  RunLog(std::string scenario, std::vector<std::string> labels, std::int64_t reps, std::int64_t days);

  const std::string& scenario() const { return scenario_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t regions() const { return labels_.size(); }
  std::int64_t reps() const { return reps_; }
  std::int64_t days() const { return days_; }
  std::size_t rows() const { return deployed_.size(); }
  std::size_t row(std::int64_t rep, std::int64_t day) const;

  // Urn: region-0 mass fraction after the day. Sepp: region-0 deployment probability for the day.
  double value(std::size_t row) const { return value_[row]; }
  std::size_t deployed(std::size_t row) const { return deployed_[row]; }
  bool accepted(std::size_t row) const { return accepted_[row] != 0; }
  // Urn: per-region mass fraction. Sepp: per-region predicted rate.
  std::span<const double> rates(std::size_t row) const;
  std::span<const std::int64_t> discovered(std::size_t row) const;
  std::span<const std::int64_t> reported(std::size_t row) const;

  void set(std::size_t row, std::size_t deployed, double value, std::span<const double> rates,
           std::span<const std::int64_t> discovered, std::span<const std::int64_t> reported, bool accepted);

  // Days a Sepp replication fell back to the previous day's rates.
  std::int64_t fallbacks(std::int64_t rep) const { return fallbacks_[static_cast<std::size_t>(rep)]; }
  void set_fallbacks(std::int64_t rep, std::int64_t n) { fallbacks_[static_cast<std::size_t>(rep)] = n; }

  // value() on the final day of every replication.
  std::vector<double> terminal_values() const;

 private:
  std::string scenario_;
  std::vector<std::string> labels_;
  std::int64_t reps_ = 0;
  std::int64_t days_ = 0;
  std::vector<std::size_t> deployed_;
  std::vector<double> value_;
  std::vector<char> accepted_;
  std::vector<double> rates_;
  std::vector<std::int64_t> discovered_;
  std::vector<std::int64_t> reported_;
  std::vector<std::int64_t> fallbacks_;
};

RunLog run_urn_scenario(const ScenarioConfig& cfg, unsigned threads = 1);
RunLog run_sepp_scenario(const ScenarioConfig& cfg, unsigned threads = 1);
RunLog run_scenario(const ScenarioConfig& cfg, unsigned threads = 1);

// Synthetic pre-horizon history for the Sepp engine: warmup_days of Poisson
// counts at prior_r / warmup_days per day, on days -warmup_days .. -1.
std::vector<Event> warmup_history(const ScenarioConfig& cfg, Rng& rng);

}  // namespace feedback
