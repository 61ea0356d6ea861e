#include "feedback/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "feedback/error.hpp"

namespace feedback {

namespace {

constexpr double kRelativeEps = 1e-12;
// Roots this far outside [0,1] are snapped onto the interval.
constexpr double kUnitTolerance = 1e-12;
constexpr double kCrossCheckTolerance = 1e-9;

struct Roots {
  std::vector<double> values;
  bool double_root = false;
};

// Larger-magnitude root from the standard formula, the other from the product of roots.
Roots solve(const DriftPolynomial& f, double eps) {
  Roots out;
  if (std::abs(f.quadratic) <= eps) {
    if (std::abs(f.linear) <= eps) return out;
    out.values.push_back(-f.constant / f.linear);
    return out;
  }
  double disc = f.linear * f.linear - 4.0 * f.quadratic * f.constant;
  const double disc_scale = f.linear * f.linear + std::abs(4.0 * f.quadratic * f.constant);
  if (std::abs(disc) <= 64.0 * std::numeric_limits<double>::epsilon() * disc_scale) disc = 0.0;
  if (disc < 0.0) return out;
  if (disc == 0.0) {
    out.values.push_back(-f.linear / (2.0 * f.quadratic));
    out.double_root = true;
    return out;
  }
  const double q = -0.5 * (f.linear + std::copysign(std::sqrt(disc), f.linear));
  out.values.push_back(q / f.quadratic);
  out.values.push_back(f.constant / q);
  return out;
}

double snap_to_unit(double x) {
  if (x < 0.0 && x >= -kUnitTolerance) return 0.0;
  if (x > 1.0 && x <= 1.0 + kUnitTolerance) return 1.0;
  return x;
}

void check_rate(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be finite and >= 0");
  }
}

}  // namespace

void DeterministicMatrix2::validate() const {
  check_rate(a, "a");
  check_rate(b, "b");
  check_rate(c, "c");
  check_rate(d, "d");
  if (magnitude() <= 0.0) throw Error(ErrorKind::DegenerateMatrix, "all replacement entries are zero");
}

double DeterministicMatrix2::magnitude() const { return std::max({a, b, c, d}); }

DriftPolynomial drift_polynomial(const DeterministicMatrix2& m) {
  return {m.c + m.d - m.a - m.b, m.a - 2.0 * m.c - m.d, m.c};
}

LimitResult renlund_limit(const DeterministicMatrix2& m, double initial_a, double initial_b) {
  m.validate();
  if (!(initial_a > 0.0) || !(initial_b > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "initial ball counts must be positive");
  }
  const double eps = kRelativeEps * m.magnitude();
  if (std::abs(m.a - m.d) <= eps && m.b <= eps && m.c <= eps) {
    // Polya urn adding `a` balls per draw: Beta in units of a.
    return BetaLimit{initial_a / m.a, initial_b / m.a};
  }

  const DriftPolynomial f = drift_polynomial(m);
  const Roots roots = solve(f, eps);
  std::vector<double> admissible;
  std::vector<double> flat;
  for (double r : roots.values) {
    const double x = snap_to_unit(r);
    if (x < 0.0 || x > 1.0) continue;
    if (f.derivative(x) < 0.0) admissible.push_back(x);
    else if (roots.double_root) flat.push_back(x);
  }
  if (admissible.size() == 1) return PointMass{admissible.front(), false};
  if (admissible.empty() && flat.size() == 1) return PointMass{flat.front(), true};
  if (admissible.size() > 1) {
    const auto best = std::min_element(admissible.begin(), admissible.end(),
                                       [](double x, double y) { return std::abs(x - 0.5) < std::abs(y - 0.5); });
    return PointMass{*best, true};
  }
  throw Error(ErrorKind::NoValidRoot, "no root of the drift polynomial in [0,1] with negative slope");
}

MixedParams::MixedParams(double w_d, double w_r, double d_a, double d_b, double r_a, double r_b)
    : w_d_(w_d), w_r_(w_r), d_a_(d_a), d_b_(d_b), r_a_(r_a), r_b_(r_b) {
  if (!(w_d >= 0.0 && w_d <= 1.0 && w_r >= 0.0 && w_r <= 1.0) || std::abs(w_d + w_r - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "weights must lie in [0,1] and sum to 1");
  }
  check_rate(d_a, "d_A");
  check_rate(d_b, "d_B");
  check_rate(r_a, "r_A");
  check_rate(r_b, "r_B");
}

double MixedParams::lambda_star() const {
  const double total = r_a_ + r_b_;
  if (total <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return r_a_ / total;
}

double MixedParams::kappa() const {
  const double delta = discovered_differential();
  if (delta == 0.0) return std::numeric_limits<double>::infinity();
  return reported_weight() / delta;
}

DeterministicMatrix2 MixedParams::matrix() const {
  return {w_d_ * d_a_ + w_r_ * r_a_, w_r_ * r_b_, w_r_ * r_a_, w_d_ * d_b_ + w_r_ * r_b_};
}

double mixed_limit(const MixedParams& p) {
  const DeterministicMatrix2 m = p.matrix();
  const double eps = kRelativeEps * std::max(m.magnitude(), std::numeric_limits<double>::min());
  const double reported = p.reported_weight();
  const double delta = p.discovered_differential();
  if (m.magnitude() <= 0.0 || (reported <= eps && std::abs(delta) <= eps)) {
    throw Error(ErrorKind::DegenerateRates, "no reported weight and no discovered differential: limit is not a point");
  }
  if (std::abs(delta) <= eps) return p.w_r() * p.r_a() / reported;

  const LimitResult general = renlund_limit(m, 1.0, 1.0);
  const auto* point = std::get_if<PointMass>(&general);
  if (!point) throw Error(ErrorKind::Internal, "mixed urn produced a Beta limit");

  if (delta > 0.0) {
    // Closed form nu - sqrt(nu^2 - c), rationalized to avoid cancellation.
    const double nu = 0.5 + reported / (2.0 * delta);
    const double ratio = p.w_r() * p.r_a() / delta;
    const double closed = ratio / (nu + std::sqrt(nu * nu - ratio));
    if (std::abs(closed - point->x_star) > kCrossCheckTolerance) {
      throw Error(ErrorKind::Internal, "closed form " + std::to_string(closed) + " disagrees with drift root " +
                                           std::to_string(point->x_star));
    }
  }
  return point->x_star;
}

KappaForm kappa_form(double lambda_star, double kappa) {
  if (!(lambda_star >= 0.0 && lambda_star <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "lambda* must lie in [0,1]");
  }
  if (std::isnan(kappa)) throw Error(ErrorKind::InvalidArgument, "kappa is NaN");
  if (std::isinf(kappa)) {
    if (kappa > 0.0) return {lambda_star, true};
    throw Error(ErrorKind::InvalidArgument, "kappa is -inf");
  }
  const double nu = 0.5 * (1.0 + kappa);
  const double radicand = nu * nu - lambda_star * kappa;
  if (radicand < 0.0) {
    throw Error(ErrorKind::NegativeRadicand, "radicand " + std::to_string(radicand) + " < 0 at kappa " +
                                                 std::to_string(kappa));
  }
  const double root = std::sqrt(radicand);
  const double x = nu > 0.0 ? lambda_star * kappa / (nu + root) : nu - root;
  return {x, kappa > 0.0};
}

double large_kappa_approx(double lambda_star, double reported_weight, double discovered_differential) {
  const double denom = reported_weight + discovered_differential;
  if (denom == 0.0) throw Error(ErrorKind::DivisionByZero, "R + delta_d is zero");
  return lambda_star * reported_weight / denom;
}

}  // namespace feedback
