#pragma once

#include <span>
#include <vector>

#include "wolffkit/dyadic_cube.hpp"
#include "wolffkit/kappa_table.hpp"
#include "wolffkit/measure.hpp"
#include "wolffkit/params.hpp"
#include "wolffkit/solver.hpp"

namespace wolffkit {

struct RadiusGridSpec {
  int per_decade = 16;
  int window = 8;           // extra equally spaced radii between nearest atom and cover radius
  double min_radius = 0.0;  // 0 means the cell side
};

struct KappaOptions {
  SolverOptions solver;
  RadiusGridSpec grid;
  bool lower_bounds = true;
  int lb_probes = 16;
};

// [int u_E^q dsigma]^{(p-1-q)/(q(p-1))} for the minimal solution on sigma_E.
double kappa_est(const GridMeasure& m, const Params& prm, const Ball& e, const SolverOptions& opt = {});
double kappa_est(const GridMeasure& m, const Params& prm, const DyadicCube& e, const SolverOptions& opt = {});
// Same quantity for an already restricted measure and its solve.
double kappa_from_solution(const GridMeasure& restricted, const Params& prm, const SolveReport& rep);

// max over probes y of [int_E ((1/gamma)|x - y|^{-gamma})^q dsigma(x)]^{1/q}.
double kappa_lower_dirac(const GridMeasure& m, const Params& prm, const Ball& e, std::span<const double> probes);
double kappa_lower_dirac(const GridMeasure& restricted, const Params& prm, std::span<const double> probes);

// Radii used for the ball series at x; the last one is the cover radius.
std::vector<double> radius_grid(const GridMeasure& m, std::span<const double> x, const RadiusGridSpec& spec);

KappaTable build_ball_kappa_table(const GridMeasure& m, const Params& prm, std::span<const double> centers,
                                  const KappaOptions& opt = {});
// Cubes with mass at levels [stabilization level, j_max].
KappaTable build_cube_kappa_table(const GridMeasure& m, const Params& prm, int j_max, const KappaOptions& opt = {});
// Level whose cubes have the side of the measure's cells (rounded).
int cell_level(const GridMeasure& m);

double intrinsic_potential(const KappaTable& kt, const Params& prm, std::span<const double> x);
double sup_functional(const KappaTable& kt, const Params& prm, std::span<const double> x);
// 2^gamma / ln 2.
double sup_bound_constant(const Params& prm);

struct TrivReport {
  // max over tabulated balls of sigma(B) |B|^{-q gamma/n} / kappa(B)^q
  double constant = 0.0;
  // max over tabulated balls of the lower integrand divided by
  // constant^{1/(p-1-q)} |B|^{...} times the K integrand; <= 1 up to rounding.
  double worst_ratio = 0.0;
};
TrivReport triv_check(const KappaTable& kt, const Params& prm);

}  // namespace wolffkit
