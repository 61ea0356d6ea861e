#include <doctest.h>

#include <cmath>
#include <vector>

#include "feedback/error.hpp"
#include "feedback/limits.hpp"
#include "feedback/stats.hpp"
#include "feedback/urn.hpp"
#include "support.hpp"

using namespace feedback;
using S = AdditionSpec;

namespace {

double draw_frequency(const UrnState& state, std::size_t color, int trials, std::uint64_t seed) {
  Rng rng(seed);
  int hits = 0;
  for (int i = 0; i < trials; ++i) hits += draw(state, rng) == color ? 1 : 0;
  return static_cast<double>(hits) / trials;
}

// Random valid rule: each entry is one of the three addition kinds.
ReplacementRule random_rule(Rng& gen, std::size_t colors) {
  std::vector<std::vector<S>> rows(colors, std::vector<S>(colors));
  for (auto& row : rows) {
    for (auto& entry : row) {
      const double u = uniform01(gen);
      switch (static_cast<int>(uniform01(gen) * 3.0)) {
        case 0: entry = S::deterministic(3.0 * u); break;
        case 1: entry = S::bernoulli(u); break;
        default: entry = S::poisson(4.0 * u); break;
      }
    }
  }
  rows[0][0] = S::deterministic(1.0);
  return ReplacementRule(rows);
}

}  // namespace

TEST_SUITE("urn_core") {

TEST_CASE("draw from a single-color urn always returns that color") {
  Rng rng(7);
  UrnState s({1.0, 0.0});
  for (int i = 0; i < 1000; ++i) CHECK(draw(s, rng) == 0);
}

TEST_CASE("draw frequency matches the Top1/Top2 priors") {
  CHECK(std::abs(draw_frequency(UrnState({609.0, 379.0}), 0, 1'000'000, 11) - 609.0 / 988.0) < 0.002);
}

TEST_CASE("draw frequency is symmetric for equal real masses") {
  CHECK(std::abs(draw_frequency(UrnState({2.5, 2.5}), 0, 1'000'000, 12) - 0.5) < 0.005);
}

TEST_CASE("draw on an empty urn raises EmptyUrn") {
  Rng rng(1);
  UrnState s({0.0, 0.0});
  try {
    draw(s, rng);
    FAIL("expected EmptyUrn");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyUrn);
  }
}

TEST_CASE("invalid masses and specs are rejected") {
  CHECK_THROWS_AS(UrnState({-1.0, 1.0}), Error);
  CHECK_THROWS_AS(UrnState(std::vector<double>{}), Error);
  CHECK_THROWS_AS(S::bernoulli(1.5), Error);
  CHECK_THROWS_AS(S::deterministic(-0.1), Error);
  CHECK_THROWS_AS(S::poisson(-2.0), Error);
  CHECK_THROWS_AS(ReplacementRule::deterministic2(0, 0, 0, 0), Error);
  CHECK_THROWS_AS((DecayPolicy{1.5, DecayMode::ExpectedMultiplicative}.validate()), Error);
}

TEST_CASE("realize_addition") {
  Rng rng(3);
  CHECK(realize_addition(S::deterministic(0.567), rng) == 0.567);
  CHECK(realize_addition(S::bernoulli(1.0), rng) == 1.0);
  CHECK(realize_addition(S::bernoulli(0.0), rng) == 0.0);

  double sum = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) sum += realize_addition(S::poisson(3.69), rng);
  CHECK(std::abs(sum / n - 3.69) < 0.01);
}

TEST_CASE("standard Polya single step adds one ball to the drawn color") {
  Rng rng(5);
  StepTrace trace;
  UrnState next = step(UrnState({1.0, 1.0}), ReplacementRule::standard_polya(), DecayPolicy::none(), rng, &trace);
  std::vector<double> expected{1.0, 1.0};
  expected[trace.drawn] += 1.0;
  CHECK(next.masses == expected);
  CHECK(next.step == 1);
}

TEST_CASE("total decay empties the urn") {
  Rng rng(5);
  for (auto mode : {DecayMode::PerBallBinomial, DecayMode::ExpectedMultiplicative}) {
    const UrnState s = step(UrnState({10.0, 10.0}), ReplacementRule::standard_polya(), DecayPolicy{1.0, mode}, rng);
    CHECK(s.masses == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("per-ball decay on fractional masses raises DecayModeMismatch") {
  Rng rng(5);
  UrnState s({2.5, 1.0});
  try {
    apply_decay(s, DecayPolicy{0.1, DecayMode::PerBallBinomial}, rng);
    FAIL("expected DecayModeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DecayModeMismatch);
  }
}

TEST_CASE("expected one-step mass change matches the enumeration oracle") {
  const std::vector<double> masses{609.0, 379.0};
  const std::vector<double> lambda{3.69, 2.82};
  const double p_d = 0.01;
  const double total = masses[0] + masses[1];
  // Draw i with probability m_i/M, add lambda_i in expectation, then every ball survives with 1-p_d.
  double oracle = 0.0;
  for (std::size_t i = 0; i < 2; ++i) oracle += masses[i] / total * ((1.0 - p_d) * (total + lambda[i]) - total);

  const auto rule = ReplacementRule::diagonal({S::poisson(3.69), S::poisson(2.82)});
  for (auto mode : {DecayMode::PerBallBinomial, DecayMode::ExpectedMultiplicative}) {
    Rng rng(99);
    const int n = 100'000;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += step(UrnState(masses), rule, DecayPolicy{p_d, mode}, rng).total() - total;
    CHECK(std::abs(sum / n - oracle) < 0.01 * std::abs(oracle));
  }
}

TEST_CASE("simulate: one standard Polya step lands on 1/3 or 2/3") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    auto traj = simulate(UrnState({1.0, 1.0}), ReplacementRule::standard_polya(), DecayPolicy::none(), 1, rng);
    REQUIRE(traj.size() == 1);
    CHECK((traj[0] == doctest::Approx(1.0 / 3.0) || traj[0] == doctest::Approx(2.0 / 3.0)));
  }
}

TEST_CASE("simulate rejects a zero horizon") {
  Rng rng(1);
  CHECK_THROWS_AS(simulate(UrnState({1.0, 1.0}), ReplacementRule::standard_polya(), DecayPolicy::none(), 0, rng),
                  Error);
}

TEST_CASE("simulate: the lower-rate color loses ground under uncorrected Bernoulli additions") {
  // The fraction of the weaker color drifts to 0 only polynomially slowly, so at 1e5 steps
  // most runs are still well above 0.05; the robust finite-horizon signature is that the
  // typical run has already ceded the majority.
  const auto rule = ReplacementRule::diagonal({S::bernoulli(0.10), S::bernoulli(0.11)});
  std::vector<double> finals;
  for (std::uint64_t r = 0; r < 200; ++r) {
    Rng rng = derive_stream(2024, r);
    finals.push_back(simulate(UrnState({1.0, 1.0}), rule, DecayPolicy::none(), 100'000, rng).back());
  }
  CHECK(median(finals) < 0.5);
}

TEST_CASE("simulate: identical rows converge to the renlund limit") {
  const double la = 0.6;
  const double lb = 0.4;
  const auto limit = std::get<PointMass>(renlund_limit({la, lb, la, lb}, 1.0, 1.0)).x_star;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    auto traj = simulate(UrnState({1.0, 1.0}), ReplacementRule::deterministic2(la, lb, la, lb), DecayPolicy::none(),
                         100'000, rng);
    CHECK(std::abs(traj.back() - limit) < 0.02);
  }
}

TEST_CASE("property: masses stay non-negative under random rules and decay") {
  Rng gen(424242);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t colors = 2 + static_cast<std::size_t>(uniform01(gen) * 3.0);
    const auto rule = random_rule(gen, colors);
    std::vector<double> init(colors);
    for (double& m : init) m = std::floor(1.0 + 20.0 * uniform01(gen));
    const DecayPolicy decay{0.3 * uniform01(gen), DecayMode::ExpectedMultiplicative};
    Rng rng(static_cast<std::uint64_t>(trial));
    UrnState s(init);
    for (int t = 0; t < 200 && s.total() > 0.0; ++t) {
      s = step(s, rule, decay, rng);
      for (double m : s.masses) REQUIRE(m >= 0.0);
    }
  }
}

TEST_CASE("property: identical seeds give bit-identical trajectories") {
  Rng gen(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rule = random_rule(gen, 3);
    const DecayPolicy decay{0.05, DecayMode::ExpectedMultiplicative};
    Rng a(1000 + trial);
    Rng b(1000 + trial);
    auto ta = simulate_masses(UrnState({3.0, 2.0, 1.0}), rule, decay, 500, a);
    auto tb = simulate_masses(UrnState({3.0, 2.0, 1.0}), rule, decay, 500, b);
    CHECK(ta == tb);
  }
}

TEST_CASE("property: standard Polya urn fraction follows Beta(n_a, n_b)") {
  const double na = 2.0;
  const double nb = 4.0;
  std::vector<double> finals;
  for (std::uint64_t r = 0; r < 2000; ++r) {
    Rng rng = derive_stream(31, r);
    finals.push_back(
        simulate(UrnState({na, nb}), ReplacementRule::standard_polya(), DecayPolicy::none(), 10'000, rng).back());
  }
  const auto ks = testing::ks_one_sample(finals, [&](double x) { return testing::beta_cdf(x, na, nb); });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("property: slowed urn matches standard Polya on its addition events") {
  const int additions = 50;
  const double lambda = 0.3;
  const auto slowed = ReplacementRule::diagonal({S::bernoulli(lambda), S::bernoulli(lambda)});
  std::vector<double> slow_finals;
  std::vector<double> fast_finals;
  for (std::uint64_t r = 0; r < 2000; ++r) {
    Rng rng = derive_stream(41, r);
    UrnState s({1.0, 1.0});
    while (s.total() < 2.0 + additions) s = step(s, slowed, DecayPolicy::none(), rng);
    slow_finals.push_back(s.fraction(0));

    Rng rng2 = derive_stream(42, r);
    fast_finals.push_back(
        simulate(UrnState({1.0, 1.0}), ReplacementRule::standard_polya(), DecayPolicy::none(), additions, rng2).back());
  }
  const auto ks = testing::ks_two_sample(slow_finals, fast_finals);
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("property: conditional addition frequency at a fixed state") {
  const std::vector<double> masses{3.0, 7.0};
  const double la = 0.3;
  const double lb = 0.6;
  const auto rule = ReplacementRule::diagonal({S::bernoulli(la), S::bernoulli(lb)});
  Rng rng(8);
  int some = 0;
  int a_added = 0;
  StepTrace trace;
  for (int i = 0; i < 1'000'000; ++i) {
    step(UrnState(masses), rule, DecayPolicy::none(), rng, &trace);
    if (trace.added[0] + trace.added[1] > 0.0) {
      ++some;
      a_added += trace.added[0] > 0.0 ? 1 : 0;
    }
  }
  const double oracle = masses[0] * la / (masses[0] * la + masses[1] * lb);
  CHECK(std::abs(static_cast<double>(a_added) / some - oracle) < 0.005);
}

}  // TEST_SUITE
