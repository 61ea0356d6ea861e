#pragma once

// Closed-form asymptotics of two-color generalized urns.
//
// For a deterministic replacement matrix ((a b) (c d)) the A-fraction x drifts
// with f(x) = (c+d-a-b) x^2 + (a-2c-d) x + c. Unless the matrix is a scaled
// identity the fraction converges almost surely to the root of f in [0,1]
// with f'(x) < 0; the scaled identity gives a Beta limit.

#include <variant>

namespace feedback {

struct DeterministicMatrix2 {
  double a = 0.0;  // A added on an A draw
  double b = 0.0;  // B added on an A draw
  double c = 0.0;  // A added on a B draw
  double d = 0.0;  // B added on a B draw

  void validate() const;
  double magnitude() const;
};

struct PointMass {
  double x_star = 0.0;
  // Set when two admissible roots coincided numerically and one was picked.
  bool degenerate = false;
};

struct BetaLimit {
  double alpha = 1.0;
  double beta = 1.0;
};

using LimitResult = std::variant<PointMass, BetaLimit>;

// Coefficients of f(x) = quadratic x^2 + linear x + constant.
struct DriftPolynomial {
  double quadratic = 0.0;
  double linear = 0.0;
  double constant = 0.0;

  double operator()(double x) const { return (quadratic * x + linear) * x + constant; }
  double derivative(double x) const { return 2.0 * quadratic * x + linear; }
};

DriftPolynomial drift_polynomial(const DeterministicMatrix2& m);

LimitResult renlund_limit(const DeterministicMatrix2& m, double initial_a, double initial_b);

// Discovered/reported mixture with weights w_d + w_r = 1.
class MixedParams {
 public:
  MixedParams(double w_d, double w_r, double d_a, double d_b, double r_a, double r_b);

  double w_d() const { return w_d_; }
  double w_r() const { return w_r_; }
  double d_a() const { return d_a_; }
  double d_b() const { return d_b_; }
  double r_a() const { return r_a_; }
  double r_b() const { return r_b_; }

  // Total weight of reported incidents, w_r (r_A + r_B).
  double reported_weight() const { return w_r_ * (r_a_ + r_b_); }
  // Weighted discovered differential, w_d (d_B - d_A).
  double discovered_differential() const { return w_d_ * (d_b_ - d_a_); }
  // True relative rate r_A / (r_A + r_B); NaN when both reported rates are 0.
  double lambda_star() const;
  // reported_weight / discovered_differential; infinite when the differential is 0.
  double kappa() const;

  // Expected replacement matrix of the uncorrected mixed urn.
  DeterministicMatrix2 matrix() const;

 private:
  double w_d_, w_r_, d_a_, d_b_, r_a_, r_b_;
};

double mixed_limit(const MixedParams& p);

struct KappaForm {
  double x_star = 0.0;
  // False when kappa <= 0: the closed form was derived for d_B > d_A only.
  bool in_derivation_regime = true;
};

KappaForm kappa_form(double lambda_star, double kappa);

double large_kappa_approx(double lambda_star, double reported_weight, double discovered_differential);

}  // namespace feedback
