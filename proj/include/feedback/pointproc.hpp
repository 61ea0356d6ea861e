#pragma once

// Self-exciting point process used as the crime-rate predictor:
//   rate_r(t) = mu_r + sum_{t_i < t} weight_i * theta * omega * exp(-omega (t - t_i))
// over the events of region r. mu is per region, theta and omega are shared.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "feedback/rng.hpp"

namespace feedback {

struct Event {
  std::size_t region = 0;
  double time = 0.0;    // days
  double weight = 1.0;  // fractional events enter likelihood and excitation multiplicatively
};

struct SeppModel {
  std::vector<double> mu;  // background rate per region, incidents/day
  double theta = 0.0;      // expected offspring per event
  double omega = 1.0;      // excitation decay, 1/day

  void validate() const;
  // theta < 1; an explosive fit is reported, not rejected.
  bool stable() const { return theta < 1.0; }

  bool operator==(const SeppModel&) const = default;
};

// Half-open training window (start, end].
struct Window {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
};

struct EmConfig {
  int max_iters = 500;
  double rel_tolerance = 1e-6;
  double abs_tolerance = 1e-9;
  // Starting point; without it mu_r = events_r / window length and theta, omega below.
  std::optional<SeppModel> init;
  double theta0 = 0.5;
  double omega0 = 0.1;

  void validate() const;

  bool operator==(const EmConfig&) const = default;
};

struct EmFit {
  SeppModel model;
  int iterations = 0;
  bool converged = false;
  // Log-likelihood at the parameters entering each iteration, then at the result.
  std::vector<double> log_likelihood;
};

double intensity(const SeppModel& model, std::size_t region, double t, std::span<const Event> history);

std::vector<double> predict_rates(const SeppModel& model, std::span<const Event> events, double t);

// Log-likelihood of the events inside `window`, with the excitation
// compensator taken over each event's full offspring mass (theta per unit weight).
double log_likelihood(const SeppModel& model, std::span<const Event> events, Window window);

// Latent-branching EM over the events inside `window`. Events outside the
// window are ignored, including as excitation sources.
EmFit fit_em(std::span<const Event> events, Window window, const EmConfig& config, std::size_t regions);

// Ground-truth incidents for one day: independent Poisson(rate_r) counts.
std::vector<std::int64_t> generate_events(const std::vector<double>& true_rates, Rng& rng);

// Timestamps a day's counts at the day's midpoint.
void append_day(std::vector<Event>& log, const std::vector<std::int64_t>& counts, std::int64_t day,
                double weight = 1.0);

// Draws events on [0, horizon) from the model by simulating its branching structure.
std::vector<Event> sample_sepp(const SeppModel& model, double horizon, Rng& rng);

}  // namespace feedback
