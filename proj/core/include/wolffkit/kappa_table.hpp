#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wolffkit/dyadic_cube.hpp"
#include "wolffkit/params.hpp"

namespace wolffkit {

enum class SolveStatus { Converged, TrivialOnly, NonFinite, MaxIters };
std::string to_string(SolveStatus s);

struct KappaEntry {
  double kappa_est = 0.0;
  double kappa_lb = 0.0;
  int iterations = 0;
  double residual = 0.0;
  SolveStatus status = SolveStatus::TrivialOnly;
};

// kappa of the closed balls B(center, radii[i]); the last radius covers the
// whole support, so kappa.back() is the global value.
struct BallSeries {
  std::vector<double> center;
  std::vector<double> radii;
  std::vector<double> kappa;      // monotone envelope used by the potentials
  std::vector<double> kappa_raw;  // as solved
  std::vector<double> kappa_lb;
  std::vector<double> mass;       // sigma(B)
};

struct KappaTable {
  Params params;
  double global_kappa = 0.0;
  std::map<std::string, KappaEntry> entries;  // region id -> entry
  std::vector<std::string> failures;

  std::vector<BallSeries> balls;

  // Dyadic part: kappa of cubes at levels [j_min, j_max].
  bool has_cubes = false;
  int j_min = 0;
  int j_max = 0;
  // Cubes missing from `cubes` have kappa 0 (they carry no mass).
  bool implicit_zero = false;
  // Coarser ancestors of a positive level-j_min cube keep its kappa; set for
  // tables built from a measure with j_min at the stabilization level.
  bool coarse_stable = false;
  std::map<DyadicCube, double> cubes;

  bool empty() const { return entries.empty() && balls.empty() && cubes.empty(); }
  const BallSeries* find_series(std::span<const double> x) const;
  // Throws IncompleteTable for a missing cube unless implicit_zero.
  double cube_kappa(const DyadicCube& q) const;
};

std::string ball_region_id(std::span<const double> center, double radius);

}  // namespace wolffkit
