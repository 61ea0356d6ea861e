#include "feedback/urn.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "feedback/error.hpp"

namespace feedback {

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must lie in [0,1], got " + std::to_string(p));
  }
}

void check_nonnegative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be finite and >= 0, got " + std::to_string(v));
  }
}

template <class Record>
UrnState walk(UrnState state, const ReplacementRule& rule, const DecayPolicy& decay, std::uint64_t horizon,
              Rng& rng, Record&& record) {
  if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be >= 1");
  decay.validate();
  for (std::uint64_t t = 0; t < horizon; ++t) {
    state = step(std::move(state), rule, decay, rng);
    record(state);
  }
  return state;
}

}  // namespace

UrnState::UrnState(std::vector<double> m, std::uint64_t s) : masses(std::move(m)), step(s) {
  if (masses.empty()) throw Error(ErrorKind::InvalidArgument, "urn needs at least one color");
  for (double v : masses) check_nonnegative(v, "ball mass");
}

double UrnState::total() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }

double UrnState::fraction(std::size_t i) const {
  const double t = total();
  if (t <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return masses.at(i) / t;
}

AdditionSpec AdditionSpec::deterministic(double value) {
  check_nonnegative(value, "deterministic addition");
  return AdditionSpec(Deterministic{value});
}

AdditionSpec AdditionSpec::bernoulli(double p) {
  check_probability(p, "Bernoulli addition probability");
  return AdditionSpec(Bernoulli{p});
}

AdditionSpec AdditionSpec::poisson(double mean) {
  check_nonnegative(mean, "Poisson addition mean");
  return AdditionSpec(Poisson{mean});
}

double AdditionSpec::mean() const {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Deterministic>) return k.value;
        else if constexpr (std::is_same_v<T, Bernoulli>) return k.p;
        else return k.mean;
      },
      kind_);
}

ReplacementRule::ReplacementRule(std::vector<std::vector<AdditionSpec>> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw Error(ErrorKind::InvalidArgument, "replacement rule is empty");
  bool any_positive = false;
  for (const auto& row : rows_) {
    if (row.size() != rows_.size()) throw Error(ErrorKind::InvalidArgument, "replacement rule must be square");
    for (const auto& spec : row) any_positive = any_positive || spec.mean() > 0.0;
  }
  if (!any_positive) {
    throw Error(ErrorKind::InvalidArgument, "replacement rule needs an entry with positive expected value");
  }
}

ReplacementRule ReplacementRule::diagonal(const std::vector<AdditionSpec>& diag) {
  std::vector<std::vector<AdditionSpec>> rows(diag.size(), std::vector<AdditionSpec>(diag.size()));
  for (std::size_t i = 0; i < diag.size(); ++i) rows[i][i] = diag[i];
  return ReplacementRule(std::move(rows));
}

ReplacementRule ReplacementRule::standard_polya(std::size_t colors) {
  return diagonal(std::vector<AdditionSpec>(colors, AdditionSpec::deterministic(1.0)));
}

ReplacementRule ReplacementRule::deterministic2(double a, double b, double c, double d) {
  using S = AdditionSpec;
  return ReplacementRule({{S::deterministic(a), S::deterministic(b)}, {S::deterministic(c), S::deterministic(d)}});
}

void DecayPolicy::validate() const { check_probability(p_d, "decay probability p_d"); }

std::size_t draw(const UrnState& state, Rng& rng) {
  const double total = state.total();
  if (!(total > 0.0)) throw Error(ErrorKind::EmptyUrn, "cannot draw from an urn with zero total mass");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_nonempty = 0;
  for (std::size_t i = 0; i < state.masses.size(); ++i) {
    if (state.masses[i] <= 0.0) continue;
    acc += state.masses[i];
    last_nonempty = i;
    if (u < acc) return i;
  }
  // u landed on the rounding gap at the top of the cumulative sum
  return last_nonempty;
}

double realize_addition(const AdditionSpec& spec, Rng& rng) {
  return std::visit(
      [&rng](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, AdditionSpec::Deterministic>) return k.value;
        else if constexpr (std::is_same_v<T, AdditionSpec::Bernoulli>) return bernoulli(rng, k.p) ? 1.0 : 0.0;
        else return static_cast<double>(poisson(rng, k.mean));
      },
      spec.kind());
}

void apply_decay(UrnState& state, const DecayPolicy& decay, Rng& rng) {
  if (decay.p_d <= 0.0) return;
  if (decay.mode == DecayMode::ExpectedMultiplicative) {
    for (double& m : state.masses) m *= 1.0 - decay.p_d;
    return;
  }
  for (double m : state.masses) {
    if (m != std::floor(m)) {
      throw Error(ErrorKind::DecayModeMismatch, "per-ball binomial decay needs integer masses, got " + std::to_string(m));
    }
  }
  for (double& m : state.masses) {
    const auto balls = static_cast<std::int64_t>(m);
    if (balls == 0) continue;
    const auto removed = std::binomial_distribution<std::int64_t>(balls, decay.p_d)(rng);
    m = static_cast<double>(balls - removed);
  }
}

UrnState step(UrnState state, const ReplacementRule& rule, const DecayPolicy& decay, Rng& rng, StepTrace* trace) {
  if (rule.size() != state.size()) {
    throw Error(ErrorKind::InvalidArgument, "replacement rule size does not match urn colors");
  }
  const std::size_t drawn = draw(state, rng);
  if (trace) {
    trace->drawn = drawn;
    trace->added.assign(state.size(), 0.0);
  }
  for (std::size_t j = 0; j < state.size(); ++j) {
    const double added = realize_addition(rule.at(drawn, j), rng);
    state.masses[j] += added;
    if (trace) trace->added[j] = added;
  }
  apply_decay(state, decay, rng);
  ++state.step;
  return state;
}

std::vector<double> simulate(UrnState initial, const ReplacementRule& rule, const DecayPolicy& decay,
                             std::uint64_t horizon, Rng& rng) {
  std::vector<double> out;
  out.reserve(horizon);
  walk(std::move(initial), rule, decay, horizon, rng, [&out](const UrnState& s) { out.push_back(s.fraction(0)); });
  return out;
}

std::vector<std::vector<double>> simulate_masses(UrnState initial, const ReplacementRule& rule,
                                                 const DecayPolicy& decay, std::uint64_t horizon, Rng& rng) {
  std::vector<std::vector<double>> out;
  out.reserve(horizon);
  walk(std::move(initial), rule, decay, horizon, rng, [&out](const UrnState& s) { out.push_back(s.masses); });
  return out;
}

}  // namespace feedback
