// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Usage: acceptance [criterion ...]   (default: all of 1-8)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "feedback/deployment.hpp"
#include "feedback/limits.hpp"
#include "feedback/pointproc.hpp"
#include "feedback/rng.hpp"
#include "feedback/runlog_io.hpp"
#include "feedback/stats.hpp"
#include "feedback/urn.hpp"
#include "reference_scenarios.hpp"
#include "support.hpp"

using namespace feedback;

namespace {

// Criterion 1
constexpr int kBetaRuns = 2000;
constexpr std::int64_t kBetaSteps = 10'000;
constexpr double kKsAlpha = 0.01;
// Criterion 2
constexpr int kRunawayRuns = 200;
constexpr std::int64_t kRunawaySteps = 100'000;
constexpr double kRunawayThreshold = 0.95;
constexpr double kRunawayShare = 0.90;
// Criterion 3
constexpr int kMatrices = 50;
constexpr int kMatrixRuns = 40;
constexpr std::int64_t kMatrixSteps = 20'000;
constexpr double kMatrixTolerance = 0.02;
// Criterion 4
constexpr int kMixedSets = 10'000;
constexpr double kFormTolerance = 1e-9;
constexpr double kBoundaryTolerance = 0.005;
// Criterion 5
constexpr double kTop2Target = 0.567;
constexpr double kRandomTarget = 0.610;
constexpr double kUrnTolerance = 0.02;
constexpr double kRunawayMedian = 0.95;
// Criterion 6
constexpr double kSeppTolerance = 0.03;
constexpr double kSeppDisplacement = 0.03;
constexpr double kIqrFactor = 3.0;
// Criterion 7
constexpr int kEmSeeds = 20;
constexpr double kEmHorizon = 2000.0;
constexpr double kEmRelError = 0.15;
constexpr double kMonotoneSlack = 1e-8;
// Criterion 8
constexpr unsigned kThreadsA = 1;
constexpr unsigned kThreadsB = 4;
constexpr std::int64_t kSeppDeterminismReps = 16;

int failures = 0;

void report(const std::string& id, bool pass, const std::string& text, double seconds) {
  if (!pass) ++failures;
  std::printf("%s %-4s %s [%.1fs]\n", pass ? "PASS" : "FAIL", id.c_str(), text.c_str(), seconds);
  std::fflush(stdout);
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

void beta_limit() {
  const Timer t;
  std::vector<double> finals;
  for (int r = 0; r < kBetaRuns; ++r) {
    Rng rng = derive_stream(101, static_cast<std::uint64_t>(r));
    finals.push_back(
        simulate(UrnState({3.0, 5.0}), ReplacementRule::standard_polya(), DecayPolicy::none(), kBetaSteps, rng).back());
  }
  const auto ks = testing::ks_one_sample(finals, [](double x) { return testing::beta_cdf(x, 3.0, 5.0); });
  report("1", ks.p_value > kKsAlpha,
         fmt("Beta(3,5) limit: %d runs x %lld steps, KS D=%.4f p=%.3f (need p > %.2f)", kBetaRuns,
             static_cast<long long>(kBetaSteps), ks.statistic, ks.p_value, kKsAlpha),
         t.seconds());
}

void runaway() {
  const Timer t;
  const auto rule = ReplacementRule::diagonal({AdditionSpec::bernoulli(0.11), AdditionSpec::bernoulli(0.10)});
  std::vector<double> finals;
  int high = 0;
  for (int r = 0; r < kRunawayRuns; ++r) {
    Rng rng = derive_stream(102, static_cast<std::uint64_t>(r));
    const double x = simulate(UrnState({1.0, 1.0}), rule, DecayPolicy::none(), kRunawaySteps, rng).back();
    finals.push_back(x);
    high += x > kRunawayThreshold;
  }
  const double share = static_cast<double>(high) / kRunawayRuns;
  report("2", share >= kRunawayShare,
         fmt("runaway (0.11, 0.10): %d runs x %lld steps, %.1f%% end above %.2f (need >= %.0f%%), median %.4f",
             kRunawayRuns, static_cast<long long>(kRunawaySteps), 100.0 * share, kRunawayThreshold,
             100.0 * kRunawayShare, median(finals)),
         t.seconds());
}

void closed_form_vs_monte_carlo() {
  const Timer t;
  Rng gen(103);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int within = 0;
  int tried = 0;
  double worst = 0.0;
  while (tried < kMatrices) {
    const DeterministicMatrix2 m{u(gen), u(gen), u(gen), u(gen)};
    const auto limit = renlund_limit(m, 1.0, 1.0);
    const auto* point = std::get_if<PointMass>(&limit);
    if (!point) continue;
    const auto rule = ReplacementRule::deterministic2(m.a, m.b, m.c, m.d);
    std::vector<double> finals;
    for (int r = 0; r < kMatrixRuns; ++r) {
      Rng rng = derive_stream(1030 + static_cast<std::uint64_t>(tried), static_cast<std::uint64_t>(r));
      finals.push_back(simulate(UrnState({1.0, 1.0}), rule, DecayPolicy::none(), kMatrixSteps, rng).back());
    }
    const double err = std::abs(median(finals) - point->x_star);
    worst = std::max(worst, err);
    within += err <= kMatrixTolerance;
    ++tried;
  }
  report("3", within == kMatrices,
         fmt("closed form vs simulation: %d/%d U(0,1) matrices within %.2f (%d runs x %lld steps), worst %.4f", within,
             kMatrices, kMatrixTolerance, kMatrixRuns, static_cast<long long>(kMatrixSteps), worst),
         t.seconds());
}

void mixed_consistency() {
  const Timer t;
  Rng gen(104);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int sets = 0;
  while (sets < kMixedSets) {
    const double w_d = 1e-3 + (1.0 - 2e-3) * u(gen);
    const double d_a = u(gen);
    const double d_b = u(gen);
    MixedParams p(w_d, 1.0 - w_d, d_a, d_b, u(gen), 1e-3 + u(gen));
    if (!(p.discovered_differential() > 0.0)) continue;
    worst = std::max(worst, std::abs(kappa_form(p.lambda_star(), p.kappa()).x_star - mixed_limit(p)));
    ++sets;
  }
  double boundary = 0.0;
  for (double lambda : {0.001, 0.999}) {
    MixedParams p(0.5, 0.5, lambda, 1.0 - lambda, lambda, 1.0 - lambda);
    boundary = std::max(boundary, std::abs(mixed_limit(p) - lambda));
  }
  report("4", worst < kFormTolerance && boundary < kBoundaryTolerance,
         fmt("mixed limit forms agree: max |kappa_form - mixed_limit| = %.2e over %d sets with delta_d > 0 "
             "(need < %.0e); boundary max |x* - lambda*| = %.4f (need < %.3f)",
             worst, kMixedSets, kFormTolerance, boundary, kBoundaryTolerance),
         t.seconds());
}

Spread terminal(const ScenarioConfig& cfg) { return spread(run_scenario(cfg, worker_threads()).terminal_values()); }

void urn_scenarios() {
  const auto pairs = testing::urn_pairs();
  struct Pair {
    testing::RegionPair regions;
    double target;
  };
  for (const Pair& p : {Pair{pairs[0], kTop2Target}, Pair{pairs[1], kRandomTarget}}) {
    const std::string vs = p.regions.a.label + " vs " + p.regions.b.label;
    {
      const Timer t;
      const Spread s = terminal(testing::urn_entry(p.regions, false, false).config);
      report("5a", s.median > kRunawayMedian,
             fmt("%s, discovered only, uncorrected: median %.4f (need > %.2f)", vs.c_str(), s.median, kRunawayMedian),
             t.seconds());
    }
    {
      const Timer t;
      const ScenarioConfig cfg = testing::urn_entry(p.regions, true, false).config;
      const Spread s = terminal(cfg);
      const double a = cfg.regions[0].rate;
      const double b = cfg.regions[1].rate;
      const double limit = mixed_limit(MixedParams(0.5, 0.5, a, b, a, b));
      const double truth = a / (a + b);
      const bool pass = std::abs(s.median - limit) <= kUrnTolerance && std::abs(s.median - truth) > kUrnTolerance;
      report("5b", pass,
             fmt("%s, mixed, uncorrected: median %.4f, limit %.4f (need within %.2f), lambda* %.4f (need off by > %.2f)",
                 vs.c_str(), s.median, limit, kUrnTolerance, truth, kUrnTolerance),
             t.seconds());
    }
    for (bool mixed : {false, true}) {
      const Timer t;
      const Spread s = terminal(testing::urn_entry(p.regions, mixed, true).config);
      report("5c", std::abs(s.median - p.target) <= kUrnTolerance,
             fmt("%s, %s, corrected: median %.4f (need %.3f +- %.2f), IQR %.4f", vs.c_str(),
                 mixed ? "mixed" : "discovered only", s.median, p.target, kUrnTolerance, s.iqr()),
             t.seconds());
    }
  }
}

void sepp_loop() {
  const auto pairs = testing::sepp_pairs();
  const double targets[] = {kTop2Target, kRandomTarget};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string vs = pairs[i].a.label + " vs " + pairs[i].b.label;
    Timer t;
    const Spread corrected = terminal(testing::sepp_entry(pairs[i], testing::SeppVariant::Corrected).config);
    const double corrected_seconds = t.seconds();
    t = Timer();
    const Spread plain = terminal(testing::sepp_entry(pairs[i], testing::SeppVariant::Uncorrected).config);
    const bool spread_ok = plain.iqr() >= kIqrFactor * corrected.iqr();
    const bool displaced = std::abs(plain.median - targets[i]) > kSeppDisplacement;
    report("6a", spread_ok && displaced,
           fmt("%s, uncorrected: IQR %.4f vs corrected %.4f (need >= %.0fx); median %.4f vs target %.3f "
               "(need off by > %.2f)",
               vs.c_str(), plain.iqr(), corrected.iqr(), kIqrFactor, plain.median, targets[i], kSeppDisplacement),
           t.seconds());
    report("6b", std::abs(corrected.median - targets[i]) <= kSeppTolerance,
           fmt("%s, input filter: median %.4f (need %.3f +- %.2f), IQR %.4f", vs.c_str(), corrected.median, targets[i],
               kSeppTolerance, corrected.iqr()),
           corrected_seconds);
    t = Timer();
    const Spread mixed = terminal(testing::sepp_entry(pairs[i], testing::SeppVariant::MixedCorrected).config);
    report("6b", std::abs(mixed.median - targets[i]) <= kSeppTolerance,
           fmt("%s, mixed incidents, filter on discovered: median %.4f (need %.3f +- %.2f), IQR %.4f", vs.c_str(),
               mixed.median, targets[i], kSeppTolerance, mixed.iqr()),
           t.seconds());
  }
}

void em_self_consistency() {
  const Timer t;
  const SeppModel truth{{0.8}, 0.4, 0.3};
  std::vector<double> mu;
  std::vector<double> theta;
  std::vector<double> omega;
  bool monotone = true;
  for (int s = 0; s < kEmSeeds; ++s) {
    Rng rng = derive_stream(107, static_cast<std::uint64_t>(s));
    const auto events = sample_sepp(truth, kEmHorizon, rng);
    const EmFit fit = fit_em(events, {0.0, kEmHorizon}, {}, 1);
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
      monotone = monotone && fit.log_likelihood[i] >= fit.log_likelihood[i - 1] - kMonotoneSlack;
    }
    mu.push_back(fit.model.mu[0]);
    theta.push_back(fit.model.theta);
    omega.push_back(fit.model.omega);
  }
  const double e_mu = std::abs(median(mu) / truth.mu[0] - 1.0);
  const double e_theta = std::abs(median(theta) / truth.theta - 1.0);
  const double e_omega = std::abs(median(omega) / truth.omega - 1.0);
  const bool pass = monotone && std::max({e_mu, e_theta, e_omega}) < kEmRelError;
  report("7", pass,
         fmt("EM recovery over %d seeds x %.0f days: relative error mu %.3f, theta %.3f, omega %.3f (need < %.2f); "
             "log-likelihood monotone: %s",
             kEmSeeds, kEmHorizon, e_mu, e_theta, e_omega, kEmRelError, monotone ? "yes" : "NO"),
         t.seconds());
}

void determinism() {
  const auto pairs = testing::urn_pairs();
  std::vector<ScenarioConfig> configs{testing::urn_entry(pairs[0], false, true).config,
                                      testing::urn_entry(pairs[1], true, true).config,
                                      testing::sepp_entry(pairs[0], testing::SeppVariant::Uncorrected).config};
  configs.back().reps = kSeppDeterminismReps;
  for (const auto& cfg : configs) {
    const Timer t;
    const std::string a = format_runlog(run_scenario(cfg, kThreadsA), meta_for(cfg));
    const std::string b = format_runlog(run_scenario(cfg, kThreadsB), meta_for(cfg));
    report("8", a == b,
           fmt("%s: CSV at %u vs %u threads byte-identical (%zu bytes, %lld reps)", cfg.name.c_str(), kThreadsA,
               kThreadsB, a.size(), static_cast<long long>(cfg.reps)),
           t.seconds());
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int c = std::atoi(argv[i]);
    if (c < 1 || c > 8) {
      std::fprintf(stderr, "usage: %s [criterion 1-8 ...]\n", argv[0]);
      return 1;
    }
    selected.insert(c);
  }
  const std::vector<std::function<void()>> criteria{beta_limit,   runaway,   closed_form_vs_monte_carlo,
                                                    mixed_consistency, urn_scenarios, sepp_loop,
                                                    em_self_consistency, determinism};
  const Timer total;
  try {
    for (int c = 1; c <= 8; ++c) {
      if (selected.empty() || selected.count(c)) criteria[static_cast<std::size_t>(c - 1)]();
    }
  } catch (const std::exception& e) {
    std::printf("FAIL      aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d failing line(s), %.1fs total\n", failures ? "FAILED" : "ALL PASSED", failures, total.seconds());
  return failures ? 1 : 0;
}
