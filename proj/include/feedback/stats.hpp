#pragma once

#include <span>
#include <vector>

namespace feedback {

// Linear-interpolation quantile (Hyndman-Fan type 7) of an unsorted sample.
double quantile(std::span<const double> sample, double q);

inline double median(std::span<const double> sample) { return quantile(sample, 0.5); }

struct Spread {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double iqr() const { return q75 - q25; }
};

Spread spread(std::span<const double> sample);

}  // namespace feedback
