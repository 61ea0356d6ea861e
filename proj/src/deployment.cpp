#include "feedback/deployment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <thread>

#include "feedback/error.hpp"

namespace feedback {

namespace {

bool safe_identifier(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

Error config_error(const ScenarioConfig& cfg, const std::string& what) {
  return Error(ErrorKind::Config, "scenario '" + cfg.name + "': " + what);
}

template <class Fn>
void for_each_rep(std::int64_t reps, unsigned threads, Fn&& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
  if (workers == 1) {
    for (std::int64_t r = 0; r < reps; ++r) fn(r);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::int64_t r = next++; r < reps; r = next++) {
          try {
            fn(r);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = reps;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

MixedRates mixed_rates(const ScenarioConfig& cfg) {
  MixedRates m;
  m.w_d = cfg.incident_mode == IncidentMode::Mixed ? cfg.w_d : 1.0;
  m.w_r = cfg.incident_mode == IncidentMode::Mixed ? cfg.w_r : 0.0;
  for (const auto& r : cfg.regions) {
    m.discovered.push_back(AdditionSpec::poisson(r.rate));
    m.reported.push_back(AdditionSpec::poisson(r.rate));
  }
  return m;
}

void run_urn_rep(const ScenarioConfig& cfg, std::int64_t rep, RunLog& log) {
  Rng rng = derive_stream(cfg.master_seed, static_cast<std::uint64_t>(rep));
  const std::size_t n = cfg.region_count();
  const MixedRates rates = mixed_rates(cfg);
  const ReplacementRule uncorrected = ReplacementRule::diagonal(rates.discovered);
  const bool mixed = cfg.incident_mode == IncidentMode::Mixed;
  const auto kind = cfg.correction.kind;

  std::vector<double> prior(n);
  for (std::size_t r = 0; r < n; ++r) prior[r] = cfg.regions[r].prior;
  UrnState state(prior);

  IncidentTrace trace;
  std::vector<double> shares(n);
  std::vector<std::int64_t> discovered(n);
  for (std::int64_t day = 0; day < cfg.horizon_days; ++day) {
    if (!mixed && kind == CorrectionMode::Kind::None) {
      StepTrace st;
      state = step(std::move(state), uncorrected, DecayPolicy::none(), rng, &st);
      trace.incidents.region = st.drawn;
      trace.incidents.discovered_count = std::llround(st.added[st.drawn]);
      trace.incidents.reported_counts.assign(n, 0);
      trace.accepted = true;
    } else if (!mixed) {
      state = corrected_step_discovered(std::move(state), rates.discovered, rng, cfg.gating, &trace);
    } else if (kind == CorrectionMode::Kind::MixedRejection) {
      state = corrected_step_mixed(std::move(state), rates, rng, cfg.gating, &trace);
    } else {
      state = mixed_step(std::move(state), rates, rng, kind == CorrectionMode::Kind::DiscoveredRejection, &trace);
    }
    apply_decay(state, cfg.decay, rng);

    for (std::size_t r = 0; r < n; ++r) shares[r] = state.fraction(r);
    std::fill(discovered.begin(), discovered.end(), 0);
    discovered[trace.incidents.region] = trace.incidents.discovered_count;
    log.set(log.row(rep, day), trace.incidents.region, shares[0], shares, discovered, trace.incidents.reported_counts,
            trace.accepted);
  }
}

// Index of the first event still inside the training window ending at `day`.
std::size_t window_begin(const std::vector<Event>& events, std::size_t from, double start) {
  while (from < events.size() && events[from].time <= start) ++from;
  return from;
}

void run_sepp_rep(const ScenarioConfig& cfg, std::int64_t rep, RunLog& log) {
  Rng rng = derive_stream(cfg.master_seed, static_cast<std::uint64_t>(rep));
  const std::size_t n = cfg.region_count();
  const bool mixed = cfg.incident_mode == IncidentMode::Mixed;
  const double discovered_weight = mixed ? cfg.w_d : 1.0;
  const bool filter = cfg.correction.kind == CorrectionMode::Kind::DiscoveredRejection;
  std::vector<double> truth(n);
  for (std::size_t r = 0; r < n; ++r) truth[r] = cfg.regions[r].rate;

  std::vector<Event> events = warmup_history(cfg, rng);
  std::size_t first = 0;
  std::optional<SeppModel> model;
  std::vector<double> last_rates;
  std::int64_t fallbacks = 0;
  std::vector<std::int64_t> discovered(n);
  std::vector<std::int64_t> reported(n, 0);
  const auto window_days = static_cast<double>(cfg.training_window_days);

  for (std::int64_t day = 0; day < cfg.horizon_days; ++day) {
    const Window window{static_cast<double>(day) - window_days, static_cast<double>(day)};
    first = window_begin(events, first, window.start);
    const std::span<const Event> training(events.data() + first, events.size() - first);

    std::vector<double> rates;
    try {
      EmConfig em = cfg.em;
      if (cfg.em_warm_start && model) em.init = model;
      EmFit fit = fit_em(training, window, em, n);
      rates = predict_rates(fit.model, training, static_cast<double>(day) + 0.5);
      model = std::move(fit.model);
    } catch (const Error&) {
      rates.clear();
    }
    const double total = std::accumulate(rates.begin(), rates.end(), 0.0);
    if (rates.empty() || !(total > 0.0) || !std::isfinite(total)) {
      ++fallbacks;
      rates = last_rates.empty() ? std::vector<double>(n, 1.0) : last_rates;
    }
    last_rates = rates;
    const double sum = std::accumulate(rates.begin(), rates.end(), 0.0);

    // deploy with probability proportional to predicted rate
    double u = uniform01(rng) * sum;
    std::size_t visited = n - 1;
    for (std::size_t r = 0; r < n; ++r) {
      if (u < rates[r]) {
        visited = r;
        break;
      }
      u -= rates[r];
    }
    const double deploy_prob = rates[visited] / sum;

    const std::vector<std::int64_t> incidents = generate_events(truth, rng);
    std::fill(discovered.begin(), discovered.end(), 0);
    discovered[visited] = incidents[visited];

    std::int64_t kept = incidents[visited];
    bool accepted = true;
    if (filter) {
      // keep with probability (sum of the other regions' rates) / (sum of all rates)
      if (cfg.gating == Gating::Batch) {
        accepted = bernoulli(rng, 1.0 - deploy_prob);
        kept = accepted ? kept : 0;
      } else {
        std::int64_t k = 0;
        for (std::int64_t i = 0; i < incidents[visited]; ++i) k += bernoulli(rng, 1.0 - deploy_prob) ? 1 : 0;
        kept = k;
        accepted = k > 0;
      }
    }
    std::vector<std::int64_t> day_counts(n, 0);
    day_counts[visited] = kept;
    append_day(events, day_counts, day, discovered_weight);
    if (mixed) {
      reported = generate_events(truth, rng);
      append_day(events, reported, day, cfg.w_r);
    }

    log.set(log.row(rep, day), visited, rates[0] / sum, rates, discovered, reported, accepted);
  }
  log.set_fallbacks(rep, fallbacks);
}

RunLog empty_log(const ScenarioConfig& cfg) {
  std::vector<std::string> labels;
  for (const auto& r : cfg.regions) labels.push_back(r.label);
  return RunLog(cfg.name, std::move(labels), cfg.reps, cfg.horizon_days);
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!safe_identifier(name)) throw config_error(*this, "name must be non-empty and use only letters, digits, '_', '-', '.'");
  if (regions.size() < 2) throw config_error(*this, "need at least two regions");
  std::set<std::string> labels;
  double prior_total = 0.0;
  for (const auto& r : regions) {
    if (!safe_identifier(r.label)) throw config_error(*this, "region label '" + r.label + "' must use letters, digits, '_', '-', '.'");
    if (!labels.insert(r.label).second) throw config_error(*this, "region labels must be unique");
    if (!(r.prior >= 0.0) || !std::isfinite(r.prior)) throw config_error(*this, "priors must be finite and >= 0");
    if (!(r.rate >= 0.0) || !std::isfinite(r.rate)) throw config_error(*this, "rates must be finite and >= 0");
    prior_total += r.prior;
  }
  if (!(prior_total > 0.0)) throw config_error(*this, "priors must not all be zero");
  if (horizon_days < 1) throw config_error(*this, "horizon_days must be >= 1");
  if (reps < 1) throw config_error(*this, "reps must be >= 1");
  if (incident_mode == IncidentMode::Mixed &&
      (!(w_d >= 0.0 && w_r >= 0.0) || std::abs(w_d + w_r - 1.0) > 1e-12)) {
    throw config_error(*this, "w_d and w_r must be >= 0 and sum to 1");
  }
  correction.validate();
  if (correction.kind == CorrectionMode::Kind::MixedRejection) {
    if (engine != Engine::Urn || incident_mode != IncidentMode::Mixed) {
      throw config_error(*this, "mixed_rejection needs the urn engine with mixed incidents");
    }
    if (std::abs(correction.w_d - w_d) > 1e-12 || std::abs(correction.w_r - w_r) > 1e-12) {
      throw config_error(*this, "mixed_rejection weights differ from the incident weights");
    }
  }
  if (engine == Engine::Urn) {
    try {
      decay.validate();
    } catch (const Error& e) {
      throw config_error(*this, e.what());
    }
    if (decay.mode == DecayMode::PerBallBinomial && decay.p_d > 0.0) {
      if (incident_mode == IncidentMode::Mixed) throw config_error(*this, "per-ball decay needs integer masses");
      for (const auto& r : regions) {
        if (r.prior != std::floor(r.prior)) throw config_error(*this, "per-ball decay needs integer priors");
      }
    }
  } else {
    if (training_window_days < 1) throw config_error(*this, "training_window_days must be >= 1");
    if (warmup_days < 0) throw config_error(*this, "warmup_days must be >= 0");
    try {
      em.validate();
    } catch (const Error& e) {
      throw config_error(*this, e.what());
    }
  }
}

double ScenarioConfig::true_ratio() const {
  double total = 0.0;
  for (const auto& r : regions) total += r.rate;
  return total > 0.0 ? regions.at(0).rate / total : std::nan("");
}

RunLog::RunLog(std::string scenario, std::vector<std::string> labels, std::int64_t reps, std::int64_t days)
    : scenario_(std::move(scenario)), labels_(std::move(labels)), reps_(reps), days_(days) {
  const auto rows = static_cast<std::size_t>(reps * days);
  const std::size_t n = labels_.size();
  deployed_.assign(rows, 0);
  value_.assign(rows, 0.0);
  accepted_.assign(rows, 0);
  rates_.assign(rows * n, 0.0);
  discovered_.assign(rows * n, 0);
  reported_.assign(rows * n, 0);
  fallbacks_.assign(static_cast<std::size_t>(reps), 0);
}

std::size_t RunLog::row(std::int64_t rep, std::int64_t day) const {
  if (rep < 0 || rep >= reps_ || day < 0 || day >= days_) throw Error(ErrorKind::InvalidArgument, "row out of range");
  return static_cast<std::size_t>(rep * days_ + day);
}

std::span<const double> RunLog::rates(std::size_t row) const {
  return {rates_.data() + row * regions(), regions()};
}

std::span<const std::int64_t> RunLog::discovered(std::size_t row) const {
  return {discovered_.data() + row * regions(), regions()};
}

std::span<const std::int64_t> RunLog::reported(std::size_t row) const {
  return {reported_.data() + row * regions(), regions()};
}

void RunLog::set(std::size_t row, std::size_t deployed, double value, std::span<const double> rates,
                 std::span<const std::int64_t> discovered, std::span<const std::int64_t> reported, bool accepted) {
  const std::size_t n = regions();
  deployed_[row] = deployed;
  value_[row] = value;
  accepted_[row] = accepted ? 1 : 0;
  std::copy_n(rates.begin(), n, rates_.begin() + static_cast<std::ptrdiff_t>(row * n));
  std::copy_n(discovered.begin(), n, discovered_.begin() + static_cast<std::ptrdiff_t>(row * n));
  std::copy_n(reported.begin(), n, reported_.begin() + static_cast<std::ptrdiff_t>(row * n));
}

std::vector<double> RunLog::terminal_values() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(reps_));
  for (std::int64_t r = 0; r < reps_; ++r) out.push_back(value_[row(r, days_ - 1)]);
  return out;
}

RunLog run_urn_scenario(const ScenarioConfig& cfg, unsigned threads) {
  cfg.validate();
  if (cfg.engine != Engine::Urn) throw config_error(cfg, "run_urn_scenario needs engine = urn");
  RunLog log = empty_log(cfg);
  for_each_rep(cfg.reps, threads, [&](std::int64_t rep) { run_urn_rep(cfg, rep, log); });
  return log;
}

RunLog run_sepp_scenario(const ScenarioConfig& cfg, unsigned threads) {
  cfg.validate();
  if (cfg.engine != Engine::Sepp) throw config_error(cfg, "run_sepp_scenario needs engine = sepp");
  RunLog log = empty_log(cfg);
  for_each_rep(cfg.reps, threads, [&](std::int64_t rep) { run_sepp_rep(cfg, rep, log); });
  return log;
}

RunLog run_scenario(const ScenarioConfig& cfg, unsigned threads) {
  return cfg.engine == Engine::Urn ? run_urn_scenario(cfg, threads) : run_sepp_scenario(cfg, threads);
}

std::vector<Event> warmup_history(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<Event> events;
  if (cfg.warmup_days <= 0) return events;
  std::vector<double> daily(cfg.region_count());
  for (std::size_t r = 0; r < daily.size(); ++r) {
    daily[r] = cfg.regions[r].prior / static_cast<double>(cfg.warmup_days);
  }
  for (std::int64_t day = -cfg.warmup_days; day < 0; ++day) append_day(events, generate_events(daily, rng), day);
  return events;
}

}  // namespace feedback
