#pragma once

// Generalized Polya urn over real-valued ball masses.

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "feedback/rng.hpp"

namespace feedback {

struct RegionId {
  std::size_t index = 0;
  std::string label;
};

struct UrnState {
  std::vector<double> masses;
  std::uint64_t step = 0;

  UrnState() = default;
  explicit UrnState(std::vector<double> m, std::uint64_t s = 0);

  std::size_t size() const { return masses.size(); }
  double total() const;
  // Share of mass held by region i; NaN on an empty urn.
  double fraction(std::size_t i) const;
};

// Amount of mass added to one color after a draw.
class AdditionSpec {
 public:
  struct Deterministic { double value; };
  struct Bernoulli { double p; };
  struct Poisson { double mean; };
  using Kind = std::variant<Deterministic, Bernoulli, Poisson>;

  AdditionSpec() : kind_(Deterministic{0.0}) {}

  static AdditionSpec deterministic(double value);
  static AdditionSpec bernoulli(double p);
  static AdditionSpec poisson(double mean);

  const Kind& kind() const { return kind_; }
  double mean() const;

 private:
  explicit AdditionSpec(Kind k) : kind_(k) {}
  Kind kind_;
};

// Row = drawn color, column = color receiving the addition.
class ReplacementRule {
 public:
  explicit ReplacementRule(std::vector<std::vector<AdditionSpec>> rows);

  static ReplacementRule diagonal(const std::vector<AdditionSpec>& diag);
  static ReplacementRule standard_polya(std::size_t colors = 2);
  // Real-valued 2x2 matrix ((a b) (c d)) with deterministic entries.
  static ReplacementRule deterministic2(double a, double b, double c, double d);

  std::size_t size() const { return rows_.size(); }
  const AdditionSpec& at(std::size_t drawn, std::size_t added) const { return rows_[drawn][added]; }

 private:
  std::vector<std::vector<AdditionSpec>> rows_;
};

enum class DecayMode { PerBallBinomial, ExpectedMultiplicative };

struct DecayPolicy {
  double p_d = 0.0;
  DecayMode mode = DecayMode::ExpectedMultiplicative;

  static DecayPolicy none() { return {}; }
  void validate() const;

  bool operator==(const DecayPolicy&) const = default;
};

// What one step did, for logging. `added` is mass added per color before decay.
struct StepTrace {
  std::size_t drawn = 0;
  std::vector<double> added;
};

// Color index drawn with probability proportional to its mass.
std::size_t draw(const UrnState& state, Rng& rng);

double realize_addition(const AdditionSpec& spec, Rng& rng);

void apply_decay(UrnState& state, const DecayPolicy& decay, Rng& rng);

UrnState step(UrnState state, const ReplacementRule& rule, const DecayPolicy& decay, Rng& rng,
              StepTrace* trace = nullptr);

// Region-0 mass fraction after each of `horizon` steps.
std::vector<double> simulate(UrnState initial, const ReplacementRule& rule, const DecayPolicy& decay,
                             std::uint64_t horizon, Rng& rng);

// Same walk as simulate() with the full mass vector recorded after each step.
std::vector<std::vector<double>> simulate_masses(UrnState initial, const ReplacementRule& rule,
                                                 const DecayPolicy& decay, std::uint64_t horizon,
                                                 Rng& rng);

}  // namespace feedback
