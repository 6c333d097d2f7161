#pragma once

#include <optional>
#include <span>

#include "wolffkit/dyadic_cube.hpp"
#include "wolffkit/kappa_table.hpp"
#include "wolffkit/measure.hpp"
#include "wolffkit/params.hpp"

namespace wolffkit {

enum class DyadicKind { Wolff, Riesz };

// sum over levels j in [j_min, j_max] of the cube-averaged kernel terms at the
// cube Q_j(x) containing x. With coarse_tail the levels below j_min are added
// exactly (explicitly until Q_j(x) covers the support in x's orthant, then as
// a geometric series).
double dyadic_wolff(const GridMeasure& m, const Params& prm, std::span<const double> x, int j_min, int j_max,
                    DyadicKind kind = DyadicKind::Wolff, bool coarse_tail = false);
// Only cubes inside root: levels root.level .. j_max. Requires x in root.
double dyadic_wolff_rooted(const GridMeasure& m, const Params& prm, std::span<const double> x, const DyadicCube& root,
                           int j_max, DyadicKind kind = DyadicKind::Wolff);

// Finest level at which, for every orthant, the support inside that orthant
// lies in a single dyadic cube. Returns j_fine for an empty measure.
int stabilization_level(const GridMeasure& m, int j_fine);
int orthant_of(std::span<const double> x);

// Dyadic intrinsic potential sum_Q kappa(Q)^{q/(p-1-q)} |Q|^{-(1 - alpha p/n)/(p-1)}.
double dyadic_intrinsic(const KappaTable& kt, const Params& prm, std::span<const double> x,
                        const std::optional<DyadicCube>& root = std::nullopt);

struct DyadicTailReport {
  bool finite = true;
  double value = 0.0;  // sum over dyadic R containing P
  int explicit_levels = 0;
};
DyadicTailReport dyadic_tail_test(const KappaTable& kt, const Params& prm, const DyadicCube& p);

}  // namespace wolffkit
