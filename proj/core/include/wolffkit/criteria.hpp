#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wolffkit/kappa.hpp"
#include "wolffkit/kappa_table.hpp"
#include "wolffkit/measure.hpp"
#include "wolffkit/params.hpp"
#include "wolffkit/potentials.hpp"

namespace wolffkit {

enum class Verdict { Holds, Fails, TrivialOnly, Inconclusive };
std::string to_string(Verdict v);

struct CriteriaReport {
  std::string name;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::pair<std::string, double>> constants;
  std::vector<std::string> witnesses;
  std::vector<std::pair<std::string, double>> tolerances;
  std::vector<std::string> notes;

  double constant(const std::string& key) const;  // throws if absent
  void set(const std::string& key, double v);
};

// Midpoint grid of a ball: centers of the cubes of a per_axis^n grid over the
// bounding box that fall inside the ball, with the cube volume as weight.
struct SpatialGrid {
  int dim = 0;
  Point center;
  double radius = 0.0;
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
};
SpatialGrid ball_grid(const Point& center, double radius, int per_axis);

// kt must hold ball series for every grid point.
CriteriaReport lr_existence(const GridMeasure& m, const Params& prm, double r, const KappaTable& kt,
                            const SpatialGrid& grid);

struct ShellProfile {
  std::vector<double> inner_radii;  // L_k, shells L_k < |x - c| < 2 L_k
  std::vector<double> integrals;
  std::vector<double> log2_slopes;  // log2(S_{k+1}/S_k)
  double predicted_slope = 0.0;     // n - gamma r
};
// L^r mass of the sup functional on doubling far shells.
ShellProfile lr_domain_doubling(const GridMeasure& m, const Params& prm, double r, double first_radius, int shells,
                                int directions, const KappaOptions& opt = {});

// grid covers B(0, R); kt holds its series; cube_table (optional) is used for
// the dyadic tail.
CriteriaReport lr_local_existence(const GridMeasure& m, const Params& prm, double r, double R, const KappaTable& kt,
                                  const SpatialGrid& grid, const KappaTable* cube_table = nullptr);

// Uses every tabulated ball series of kt (centers x radii) as the sample.
CriteriaReport bmo_criteria(const GridMeasure& m, const Params& prm, const KappaTable& kt);

std::vector<Ball> sample_balls(std::span<const double> centers, int dim, std::span<const double> radii);
CriteriaReport bmo_wolff_criterion(const GridMeasure& m, const Params& prm, const std::vector<Ball>& sample);

enum class CapacityMode { CapP, Class1 };
CriteriaReport capacity_ball_criterion(const GridMeasure& m, const Params& prm, const std::vector<Ball>& sample,
                                       CapacityMode mode);

CriteriaReport verify_wolff_inequality(const GridMeasure& m, const Params& prm, const QuadratureSpec& quad);

struct EnhancedWolffOptions {
  // Fault injection: multiplies the kappa values used on the sum side.
  double sum_table_scale = 1.0;
};
CriteriaReport verify_enhanced_wolff(const GridMeasure& m, const Params& prm, double r, const KappaTable& cube_table,
                                     const EnhancedWolffOptions& opt = {});

}  // namespace wolffkit
