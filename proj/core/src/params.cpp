#include "wolffkit/params.hpp"

#include <cmath>
#include <numbers>

#include "wolffkit/format.hpp"

namespace wolffkit {

void Params::validate_kernel() const {
  if (n < 1) throw InvalidArgument("dimension n must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be > 0");
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("p must be > 1");
}

void Params::validate() const {
  if (n < 1) throw InvalidArgument("dimension n must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be > 0");
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("p must be > 1");
  if (!(q > 0.0) || !(q < p - 1.0)) throw InvalidArgument("q must satisfy 0 < q < p - 1");
  if (!(r >= 0.0)) throw InvalidArgument("r must be >= 0");
}

double Params::lr_threshold() const {
  if (!subcritical()) return kInf;
  return n * (p - 1.0) / (n - alpha * p);
}

std::string Params::describe() const {
  return "n=" + std::to_string(n) + " alpha=" + format_double(alpha) + " p=" + format_double(p) +
         " q=" + format_double(q) + " r=" + format_double(r);
}

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

}  // namespace wolffkit
