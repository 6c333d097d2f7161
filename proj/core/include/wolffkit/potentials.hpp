#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wolffkit/measure.hpp"
#include "wolffkit/params.hpp"

namespace wolffkit {

struct WolffOptions {
  // Treat the cell around x as a uniform density below the cell diameter.
  // Off means the purely atomic potential.
  bool near_field = true;
};

// Values at a list of points. Non-finite entries are recorded in `flagged`.
struct Field {
  int dim = 0;
  std::vector<double> points;  // row-major, dim per point
  std::vector<double> values;
  std::vector<std::size_t> flagged;
  std::string note;

  std::size_t size() const { return values.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * dim, static_cast<std::size_t>(dim)};
  }
};

// W_{alpha,p} sigma(x). Throws NonIntegrableKernel when alpha p >= n and sigma != 0.
double wolff(const GridMeasure& m, const Params& prm, std::span<const double> x, WolffOptions opt = {});
Field wolff_field(const GridMeasure& m, const Params& prm, std::span<const double> points, WolffOptions opt = {});

// Atomic Riesz potential sum_a w_a |x - a|^{beta - n}.
double riesz(const GridMeasure& m, double beta, std::span<const double> x);
Field riesz_field(const GridMeasure& m, double beta, std::span<const double> points);

// Riesz potential of the absolutely continuous measure with the cell densities
// of m. Finite everywhere for 0 < beta < n.
double riesz_density(const GridMeasure& m, double beta, std::span<const double> y);
// Integral of |z - y|^{beta - n} over the cube of the given center and side.
double cube_riesz_integral(std::span<const double> center, double side, std::span<const double> y, double beta);

// Evaluation of W for a fixed measure geometry and fixed points, with cell
// masses multiplied by arbitrary nonnegative factors. The sorted atom order and
// interval coefficients are cached when they fit the memory budget.
class WolffPlan {
 public:
  WolffPlan(const GridMeasure& m, const Params& prm, std::span<const double> points, WolffOptions opt = {},
            std::size_t max_cached_pairs = 60'000'000);

  std::size_t point_count() const { return npoints_; }
  bool cached() const { return cached_; }
  // cell_factors.size() == m.cell_count(); all entries >= 0.
  std::vector<double> evaluate(std::span<const double> cell_factors) const;

 private:
  double evaluate_point(std::size_t k, std::span<const double> atom_w, std::span<const double> cell_dens) const;

  const GridMeasure* m_;
  Params prm_;
  WolffOptions opt_;
  std::size_t npoints_ = 0;
  std::vector<double> points_;
  bool cached_ = false;
  std::vector<std::int64_t> cell_of_point_;
  double near_coef_ = 0.0;
  std::vector<std::uint32_t> order_;  // npoints * atoms
  std::vector<double> coef_;
};

struct QuadratureSpec {
  std::size_t samples = 20000;
  std::uint64_t seed = 1;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// V^sigma_{alpha,p}(x) = I_alpha((I_alpha sigma)^{p'-1})(x) for the cell-density model.
Estimate havin_mazya(const GridMeasure& m, const Params& prm, std::span<const double> x, const QuadratureSpec& quad);

struct EnergyReport {
  Estimate energy;          // int (I_alpha sigma)^{p'} dx
  Estimate hm_integral;     // int V dsigma
  double fubini_gap = 0.0;  // |energy - hm_integral|
  double fubini_tolerance = 0.0;
};

// Throws Divergent when (n - alpha) p' <= n.
EnergyReport energy(const GridMeasure& m, const Params& prm, const QuadratureSpec& quad);

enum class Finiteness { Finite, Infinite };
std::string to_string(Finiteness f);

struct FinitenessReport {
  Finiteness verdict = Finiteness::Finite;
  double tail_radius = 0.0;  // smallest a with B(0, a) containing the support
  double tail_value = 0.0;   // int_a^inf [sigma(B(0,r))/r^{n-alpha p}]^{1/(p-1)} dr/r
  double tail_from_one = 0.0;
};

FinitenessReport finiteness_test(const GridMeasure& m, const Params& prm);

// Mid and tail part of W at a point from its sorted atom distances, starting
// at radius r0 (near-field term excluded).
double wolff_from_radius(const RadialMassProfile& profile, const Params& prm, double r0);

}  // namespace wolffkit
