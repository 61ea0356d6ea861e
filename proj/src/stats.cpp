#include "feedback/stats.hpp"

#include <algorithm>
#include <cmath>

#include "feedback/error.hpp"

namespace feedback {

namespace {

double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> sorted_copy(std::span<const double> sample) {
  if (sample.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of an empty sample");
  std::vector<double> v(sample.begin(), sample.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

double quantile(std::span<const double> sample, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::InvalidArgument, "quantile level outside [0,1]");
  return sorted_quantile(sorted_copy(sample), q);
}

Spread spread(std::span<const double> sample) {
  const auto v = sorted_copy(sample);
  return {sorted_quantile(v, 0.25), sorted_quantile(v, 0.5), sorted_quantile(v, 0.75)};
}

}  // namespace feedback
