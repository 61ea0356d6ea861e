#include "feedback/correction.hpp"

#include <cmath>
#include <string>

#include "feedback/error.hpp"

namespace feedback {

namespace {

void check_rates(const std::vector<AdditionSpec>& rates, std::size_t regions, const char* what) {
  if (rates.size() != regions) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " needs one rate per region");
  }
}

std::int64_t as_count(double realized) {
  if (realized != std::floor(realized)) {
    throw Error(ErrorKind::InvalidArgument, "per-incident gating needs integer incident counts");
  }
  return static_cast<std::int64_t>(realized);
}

// Realizes the visited region's discovered incidents and runs the rejection
// trial(s) against the pre-addition state. Returns the discovered mass kept.
double gate_discovered(const UrnState& state, std::size_t visited, double realized, Rng& rng, Gating gating,
                       IncidentTrace& trace) {
  if (gating == Gating::Batch) {
    trace.accepted = draw(state, rng) != visited;
    trace.kept = trace.accepted ? static_cast<std::int64_t>(std::llround(realized)) : 0;
    return trace.accepted ? realized : 0.0;
  }
  const std::int64_t count = as_count(realized);
  std::int64_t kept = 0;
  for (std::int64_t k = 0; k < count; ++k) kept += draw(state, rng) != visited ? 1 : 0;
  trace.kept = kept;
  trace.accepted = kept > 0;
  return static_cast<double>(kept);
}

void start_trace(IncidentTrace& trace, std::size_t regions, std::size_t visited, double discovered) {
  trace.incidents.region = visited;
  trace.incidents.discovered_count = static_cast<std::int64_t>(std::llround(discovered));
  trace.incidents.reported_counts.assign(regions, 0);
  trace.accepted = true;
  trace.kept = trace.incidents.discovered_count;
  trace.added.assign(regions, 0.0);
}

void add_mass(UrnState& state, IncidentTrace& trace, std::size_t region, double mass) {
  state.masses[region] += mass;
  trace.added[region] += mass;
}

}  // namespace

void CorrectionMode::validate() const {
  if (kind != Kind::MixedRejection) return;
  if (!(w_d >= 0.0 && w_r >= 0.0) || std::abs(w_d + w_r - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "mixed rejection weights must be >= 0 and sum to 1");
  }
}

void MixedRates::validate(std::size_t regions) const {
  if (!(w_d >= 0.0 && w_r >= 0.0) || std::abs(w_d + w_r - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "incident weights must be >= 0 and sum to 1");
  }
  check_rates(discovered, regions, "discovered rates");
  check_rates(reported, regions, "reported rates");
}

UrnState corrected_step_discovered(UrnState state, const std::vector<AdditionSpec>& rates, Rng& rng, Gating gating,
                                   IncidentTrace* trace) {
  check_rates(rates, state.size(), "discovered rates");
  IncidentTrace local;
  IncidentTrace& t = trace ? *trace : local;

  const std::size_t visited = draw(state, rng);
  const double realized = realize_addition(rates[visited], rng);
  start_trace(t, state.size(), visited, realized);
  const double kept = gate_discovered(state, visited, realized, rng, gating, t);
  add_mass(state, t, visited, kept);
  ++state.step;
  return state;
}

UrnState corrected_step_mixed(UrnState state, const MixedRates& rates, Rng& rng, Gating gating, IncidentTrace* trace) {
  rates.validate(state.size());
  IncidentTrace local;
  IncidentTrace& t = trace ? *trace : local;

  const std::size_t visited = draw(state, rng);
  const double realized = realize_addition(rates.discovered[visited], rng);
  start_trace(t, state.size(), visited, realized);
  const double kept = gate_discovered(state, visited, realized, rng, gating, t);
  add_mass(state, t, visited, rates.w_d * kept);

  if (rates.w_r > 0.0) {
    for (std::size_t j = 0; j < state.size(); ++j) {
      const double reported = realize_addition(rates.reported[j], rng);
      t.incidents.reported_counts[j] = static_cast<std::int64_t>(std::llround(reported));
      add_mass(state, t, j, (j == visited ? rates.w_r : 1.0) * reported);
    }
  }
  ++state.step;
  return state;
}

UrnState mixed_step(UrnState state, const MixedRates& rates, Rng& rng, bool gate, IncidentTrace* trace) {
  rates.validate(state.size());
  IncidentTrace local;
  IncidentTrace& t = trace ? *trace : local;

  const std::size_t visited = draw(state, rng);
  const double realized = realize_addition(rates.discovered[visited], rng);
  start_trace(t, state.size(), visited, realized);
  const double kept = gate ? gate_discovered(state, visited, realized, rng, Gating::Batch, t) : realized;
  add_mass(state, t, visited, rates.w_d * kept);

  if (rates.w_r > 0.0) {
    for (std::size_t j = 0; j < state.size(); ++j) {
      const double reported = realize_addition(rates.reported[j], rng);
      t.incidents.reported_counts[j] = static_cast<std::int64_t>(std::llround(reported));
      add_mass(state, t, j, rates.w_r * reported);
    }
  }
  ++state.step;
  return state;
}

double horvitz_weight(double deploy_prob) {
  if (deploy_prob == 0.0) throw Error(ErrorKind::DivisionByZero, "deployment probability is zero");
  if (!(deploy_prob > 0.0 && deploy_prob <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "deployment probability must lie in (0,1]");
  }
  return 1.0 / deploy_prob;
}

UrnState weighted_step_discovered(UrnState state, const std::vector<AdditionSpec>& rates, Rng& rng,
                                  IncidentTrace* trace) {
  check_rates(rates, state.size(), "discovered rates");
  IncidentTrace local;
  IncidentTrace& t = trace ? *trace : local;

  const std::size_t visited = draw(state, rng);
  const double weight = horvitz_weight(state.fraction(visited));
  const double realized = realize_addition(rates[visited], rng);
  start_trace(t, state.size(), visited, realized);
  add_mass(state, t, visited, weight * realized);
  ++state.step;
  return state;
}

}  // namespace feedback
