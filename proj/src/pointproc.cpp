#include "feedback/pointproc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "feedback/error.hpp"

namespace feedback {

namespace {

// One region's in-window events collapsed onto distinct sorted times.
struct Track {
  std::vector<double> times;
  std::vector<double> weights;
  double total_weight = 0.0;
};

std::vector<Track> build_tracks(std::span<const Event> events, Window window, std::size_t regions) {
  std::vector<std::vector<std::pair<double, double>>> raw(regions);
  for (const Event& e : events) {
    if (e.region >= regions) throw Error(ErrorKind::InvalidArgument, "event region out of range");
    if (!std::isfinite(e.time) || !std::isfinite(e.weight)) throw Error(ErrorKind::NonFinite, "non-finite event");
    if (e.weight <= 0.0 || e.time <= window.start || e.time > window.end) continue;
    raw[e.region].emplace_back(e.time, e.weight);
  }
  std::vector<Track> tracks(regions);
  for (std::size_t r = 0; r < regions; ++r) {
    auto& ev = raw[r];
    std::sort(ev.begin(), ev.end());
    Track& tr = tracks[r];
    for (const auto& [t, w] : ev) {
      if (!tr.times.empty() && tr.times.back() == t) tr.weights.back() += w;
      else {
        tr.times.push_back(t);
        tr.weights.push_back(w);
      }
      tr.total_weight += w;
    }
  }
  return tracks;
}

struct Sufficient {
  std::vector<double> background;  // per region
  double triggered = 0.0;
  double triggered_gap = 0.0;
  double log_likelihood = 0.0;
};

// E-step in O(n) per region. With A_k = sum_{j<k} W_j e^{-omega (t_k - t_j)} and
// B_k = sum_{j<k} W_j (t_k - t_j) e^{-omega (t_k - t_j)}, both advance by recursion.
Sufficient expectation(const SeppModel& m, const std::vector<Track>& tracks, double length) {
  Sufficient s;
  s.background.assign(tracks.size(), 0.0);
  const double excite = m.theta * m.omega;
  double total_weight = 0.0;
  for (std::size_t r = 0; r < tracks.size(); ++r) {
    const Track& tr = tracks[r];
    double a = 0.0;
    double b = 0.0;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      if (k > 0) {
        const double gap = tr.times[k] - tr.times[k - 1];
        const double decay = std::exp(-m.omega * gap);
        b = decay * (b + gap * (a + tr.weights[k - 1]));
        a = decay * (a + tr.weights[k - 1]);
      }
      const double w = tr.weights[k];
      const double rate = m.mu[r] + excite * a;
      if (!(rate > 0.0)) {
        s.log_likelihood = -std::numeric_limits<double>::infinity();
        continue;
      }
      s.background[r] += w * m.mu[r] / rate;
      s.triggered += w * excite * a / rate;
      s.triggered_gap += w * excite * b / rate;
      s.log_likelihood += w * std::log(rate);
    }
    total_weight += tr.total_weight;
    s.log_likelihood -= m.mu[r] * length;
  }
  s.log_likelihood -= m.theta * total_weight;
  return s;
}

bool close(double next, double prev, const EmConfig& c) {
  return std::abs(next - prev) <= c.rel_tolerance * std::abs(prev) + c.abs_tolerance;
}

void check_finite(const SeppModel& m) {
  bool ok = std::isfinite(m.theta) && std::isfinite(m.omega);
  for (double v : m.mu) ok = ok && std::isfinite(v);
  if (!ok) throw Error(ErrorKind::NonFinite, "EM produced non-finite parameters");
}

}  // namespace

void SeppModel::validate() const {
  for (double v : mu) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "mu must be finite and >= 0");
  }
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw Error(ErrorKind::InvalidArgument, "theta must be >= 0");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw Error(ErrorKind::InvalidArgument, "omega must be > 0");
}

void EmConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorKind::InvalidArgument, "max_iters must be positive");
  if (!(rel_tolerance > 0.0) || abs_tolerance < 0.0) throw Error(ErrorKind::InvalidArgument, "bad EM tolerance");
  if (init) init->validate();
  if (!(theta0 >= 0.0) || !(omega0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "bad EM starting point");
}

double intensity(const SeppModel& model, std::size_t region, double t, std::span<const Event> history) {
  if (region >= model.mu.size()) throw Error(ErrorKind::InvalidArgument, "region out of range");
  double rate = model.mu[region];
  const double excite = model.theta * model.omega;
  for (const Event& e : history) {
    if (e.region != region) continue;
    if (e.time >= t) {
      throw Error(ErrorKind::FutureEvent, "history event at " + std::to_string(e.time) + " is not before " +
                                              std::to_string(t));
    }
    rate += e.weight * excite * std::exp(-model.omega * (t - e.time));
  }
  return rate;
}

std::vector<double> predict_rates(const SeppModel& model, std::span<const Event> events, double t) {
  std::vector<double> rates(model.mu.size());
  for (std::size_t r = 0; r < rates.size(); ++r) rates[r] = intensity(model, r, t, events);
  return rates;
}

double log_likelihood(const SeppModel& model, std::span<const Event> events, Window window) {
  model.validate();
  const auto tracks = build_tracks(events, window, model.mu.size());
  return expectation(model, tracks, window.length()).log_likelihood;
}

EmFit fit_em(std::span<const Event> events, Window window, const EmConfig& config, std::size_t regions) {
  config.validate();
  if (!(window.length() > 0.0)) throw Error(ErrorKind::EmptyWindow, "training window has no length");
  if (regions == 0) throw Error(ErrorKind::InvalidArgument, "need at least one region");
  const double length = window.length();
  const auto tracks = build_tracks(events, window, regions);

  EmFit fit;
  SeppModel& m = fit.model;
  if (config.init) {
    if (config.init->mu.size() != regions) throw Error(ErrorKind::InvalidArgument, "init model region count");
    m = *config.init;
  } else {
    m.mu.assign(regions, 0.0);
    m.theta = config.theta0;
    m.omega = config.omega0;
  }
  double total = 0.0;
  for (std::size_t r = 0; r < regions; ++r) {
    const double w = tracks[r].total_weight;
    total += w;
    // a region's first event is pure background, so a warm start needs mu_r > 0 there
    if (!config.init || (w > 0.0 && !(m.mu[r] > 0.0))) m.mu[r] = w / length;
  }
  if (total == 0.0) {
    fit.converged = true;
    fit.log_likelihood.push_back(0.0);
    return fit;
  }

  for (int it = 0; it < config.max_iters; ++it) {
    const Sufficient s = expectation(m, tracks, length);
    fit.log_likelihood.push_back(s.log_likelihood);

    SeppModel next = m;
    for (std::size_t r = 0; r < regions; ++r) next.mu[r] = s.background[r] / length;
    next.theta = s.triggered / total;
    if (s.triggered > 0.0 && s.triggered_gap > 0.0) next.omega = s.triggered / s.triggered_gap;
    check_finite(next);

    bool done = close(next.theta, m.theta, config) && close(next.omega, m.omega, config);
    for (std::size_t r = 0; r < regions; ++r) done = done && close(next.mu[r], m.mu[r], config);
    m = std::move(next);
    fit.iterations = it + 1;
    if (done) {
      fit.converged = true;
      break;
    }
  }
  fit.log_likelihood.push_back(expectation(m, tracks, length).log_likelihood);
  return fit;
}

std::vector<std::int64_t> generate_events(const std::vector<double>& true_rates, Rng& rng) {
  std::vector<std::int64_t> counts(true_rates.size());
  for (std::size_t r = 0; r < true_rates.size(); ++r) {
    if (!(true_rates[r] >= 0.0)) throw Error(ErrorKind::InvalidArgument, "true rate must be >= 0");
    counts[r] = poisson(rng, true_rates[r]);
  }
  return counts;
}

void append_day(std::vector<Event>& log, const std::vector<std::int64_t>& counts, std::int64_t day, double weight) {
  const double t = static_cast<double>(day) + 0.5;
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (counts[r] > 0) log.push_back({r, t, weight * static_cast<double>(counts[r])});
  }
}

std::vector<Event> sample_sepp(const SeppModel& model, double horizon, Rng& rng) {
  model.validate();
  if (!model.stable()) throw Error(ErrorKind::InvalidArgument, "cannot sample an explosive model (theta >= 1)");
  constexpr std::size_t kMaxEvents = 10'000'000;
  std::vector<Event> out;
  std::deque<Event> pending;
  std::uniform_real_distribution<double> when(0.0, horizon);
  std::exponential_distribution<double> delay(model.omega);
  for (std::size_t r = 0; r < model.mu.size(); ++r) {
    const std::int64_t n = poisson(rng, model.mu[r] * horizon);
    for (std::int64_t i = 0; i < n; ++i) pending.push_back({r, when(rng), 1.0});
  }
  while (!pending.empty()) {
    const Event parent = pending.front();
    pending.pop_front();
    out.push_back(parent);
    if (out.size() > kMaxEvents) throw Error(ErrorKind::NonFinite, "sampled process exceeded event cap");
    const std::int64_t children = poisson(rng, model.theta);
    for (std::int64_t c = 0; c < children; ++c) {
      const double t = parent.time + delay(rng);
      if (t < horizon) pending.push_back({parent.region, t, 1.0});
    }
  }
  std::sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
    return a.time < b.time || (a.time == b.time && a.region < b.region);
  });
  return out;
}

}  // namespace feedback
