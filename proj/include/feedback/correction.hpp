#pragma once

// Rejection-filtered urn updates. A discovered incident in region i is kept
// only when an independent second draw from the urn lands on a color other
// than i, so the chance of keeping it is 1 - x_i. Additions for region i are
// then proportional to x_i (1 - x_i) lambda_i, which removes the
// deployment bias up to a state-dependent constant.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "feedback/rng.hpp"
#include "feedback/urn.hpp"

namespace feedback {

struct IncidentBatch {
  std::size_t region = 0;  // the visited region
  std::int64_t discovered_count = 0;
  std::vector<std::int64_t> reported_counts;
};

struct CorrectionMode {
  enum class Kind { None, DiscoveredRejection, MixedRejection };
  Kind kind = Kind::None;
  double w_d = 1.0;  // MixedRejection only
  double w_r = 0.0;

  static CorrectionMode none() { return {}; }
  static CorrectionMode discovered_rejection() { return {Kind::DiscoveredRejection, 1.0, 0.0}; }
  static CorrectionMode mixed_rejection(double w_d, double w_r) { return {Kind::MixedRejection, w_d, w_r}; }
  void validate() const;

  bool operator==(const CorrectionMode&) const = default;
};

// One rejection trial per visit (Batch) or one per discovered incident.
enum class Gating { Batch, PerIncident };

struct IncidentTrace {
  IncidentBatch incidents;
  bool accepted = true;       // batch gating: the single trial; per-incident: at least one kept
  std::int64_t kept = 0;      // discovered incidents that entered the urn
  std::vector<double> added;  // mass added per region
};

// Discovered and reported incident rates per region, with class weights.
struct MixedRates {
  double w_d = 0.5;
  double w_r = 0.5;
  std::vector<AdditionSpec> discovered;
  std::vector<AdditionSpec> reported;

  void validate(std::size_t regions) const;
};

UrnState corrected_step_discovered(UrnState state, const std::vector<AdditionSpec>& rates, Rng& rng,
                                   Gating gating = Gating::Batch, IncidentTrace* trace = nullptr);

// Discovered incidents are weighted w_d and rejection-filtered; reported
// incidents of the visited region are weighted w_r and those of every other
// region enter at full weight. With w_r = 0 there is no reported stream.
UrnState corrected_step_mixed(UrnState state, const MixedRates& rates, Rng& rng, Gating gating = Gating::Batch,
                              IncidentTrace* trace = nullptr);

// Uncorrected mixed urn: visited region gets w_d * discovered + w_r * reported,
// every other region w_r * reported. With `gate_discovered` the discovered part
// goes through the rejection filter and reported weights stay at w_r.
UrnState mixed_step(UrnState state, const MixedRates& rates, Rng& rng, bool gate_discovered = false,
                    IncidentTrace* trace = nullptr);

// Importance weight for an incident found with deployment probability p.
double horvitz_weight(double deploy_prob);

// Importance-sampling counterpart of corrected_step_discovered: every
// discovered incident is kept with weight 1 / x_i.
UrnState weighted_step_discovered(UrnState state, const std::vector<AdditionSpec>& rates, Rng& rng,
                                  IncidentTrace* trace = nullptr);

}  // namespace feedback
