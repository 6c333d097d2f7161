#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace wolffkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: dimensions, exponents, malformed files or tables.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NonIntegrableKernel : public Error {
 public:
  using Error::Error;
};

class Divergent : public Error {
 public:
  using Error::Error;
};

class IncompleteTable : public Error {
 public:
  using Error::Error;
};

class NumericFailure : public Error {
 public:
  using Error::Error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Params {
  int n = 3;
  double alpha = 1.0;
  double p = 2.0;
  double q = 0.5;
  double r = 0.0;  // integrability exponent, only used by criteria

  // Throws InvalidArgument unless n >= 1, alpha > 0, p > 1 and 0 < q < p - 1.
  void validate() const;
  // Only what the Wolff kernel needs: n >= 1, alpha > 0, p > 1.
  void validate_kernel() const;

  bool subcritical() const { return alpha * p < n; }
  // (n - alpha p)/(p - 1): decay exponent of a single-atom Wolff potential.
  double gamma() const { return (n - alpha * p) / (p - 1.0); }
  double wolff_exponent() const { return 1.0 / (p - 1.0); }
  double p_prime() const { return p / (p - 1.0); }
  // u ~ (W sigma)^{(p-1)/(p-1-q)} in the bilateral estimate.
  double solution_exponent() const { return (p - 1.0) / (p - 1.0 - q); }
  // Power of kappa appearing inside the intrinsic integrand.
  double kappa_power() const { return q * (p - 1.0) / (p - 1.0 - q); }
  // Exponent of kappa after taking the 1/(p-1) root.
  double kappa_root_exponent() const { return q / (p - 1.0 - q); }
  // n(p-1)/(n - alpha p), +inf when alpha p >= n.
  double lr_threshold() const;

  std::string describe() const;
};

double unit_ball_volume(int n);
// Surface area of the unit sphere in R^n (2 for n = 1).
double unit_sphere_area(int n);

}  // namespace wolffkit
