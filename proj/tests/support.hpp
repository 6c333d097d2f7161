#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "wolffkit/measure.hpp"
#include "wolffkit/params.hpp"

namespace wolffkit::test {

inline double rel(double a, double b) {
  return a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

inline const Params kStd{3, 1.0, 2.0, 0.5, 4.0};

inline GridMeasure ball(int dim = 3, int cells = 6, int subsample = 2, double radius = 1.0) {
  MeasureSpec s;
  s.kind = MeasureSpec::Kind::UniformBall;
  s.dim = dim;
  s.cells = cells;
  s.subsample = subsample;
  s.radius = radius;
  return build_grid_measure(s);
}

inline GridMeasure random_cells(std::uint64_t seed, int dim = 2, int cells = 8, int subsample = 2) {
  MeasureSpec s;
  s.kind = MeasureSpec::Kind::RandomCells;
  s.dim = dim;
  s.cells = cells;
  s.subsample = subsample;
  s.blocks = 4;
  s.sparsity = 0.4;
  s.seed = seed;
  return build_grid_measure(s);
}

}  // namespace wolffkit::test
