#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wolffkit/dyadic_cube.hpp"

namespace wolffkit {

using Point = std::vector<double>;

struct Ball {
  Point center;
  double radius = 0.0;
};

struct MeasureSpec {
  enum class Kind { Empty, UniformBall, RadialPower, RandomCells, File };
  Kind kind = Kind::UniformBall;
  int dim = 3;
  Point center;               // defaults to the origin
  double radius = 1.0;        // ball radius, outer radius of a radial annulus
  double inner_radius = 0.0;  // radial-power only
  double exponent = 0.0;      // radial-power density |x - c|^-exponent
  double total_mass = 1.0;
  Point box_lo, box_hi;       // grid box, defaults to center -/+ radius
  int cells = 16;             // cells per axis
  int subsample = 8;          // pseudo-atoms per cell
  std::uint64_t seed = 0;     // random-cells
  double sparsity = 0.5;      // random-cells: probability a block is empty
  int blocks = 0;             // random-cells: blocks per axis, 0 = cells
  std::string path;           // file
};

std::string to_string(MeasureSpec::Kind kind);
MeasureSpec::Kind measure_kind_from_string(const std::string& s);

// A measure supported on a lattice of equal cubes. Each cell carries a mass
// split over pseudo-atoms placed at fixed offsets inside the cell. Masses are
// integer multiples of mass_unit(), so every subset sum is exact.
class GridMeasure {
 public:
  GridMeasure() = default;
  explicit GridMeasure(int dim, double side = 1.0);

  // Cells are given by their centers (which must lie on one lattice of the
  // given side). Zero-mass cells are dropped. If target_total > 0 the masses
  // are normalized to it.
  static GridMeasure from_cells(int dim, double side, int subsample, std::span<const double> centers,
                                std::span<const double> masses, double target_total = 0.0);
  // Atoms at exactly the given points, grouped into the lattice cells (anchored
  // at the origin) that contain them.
  static GridMeasure from_point_masses(int dim, double side, std::span<const double> points,
                                       std::span<const double> masses);

  int dim() const { return dim_; }
  double side() const { return side_; }
  int subsample() const { return subsample_; }
  std::size_t cell_count() const { return cell_mass_.size(); }
  std::size_t atom_count() const { return atom_weight_.size(); }
  bool empty() const { return cell_mass_.empty(); }

  std::span<const double> cell_center(std::size_t j) const {
    return {centers_.data() + j * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const double> cell_centers() const { return centers_; }
  double cell_mass(std::size_t j) const { return cell_mass_[j]; }
  std::span<const double> cell_masses() const { return cell_mass_; }
  double cell_volume() const;
  double near_radius() const;  // cell diameter

  std::span<const double> atom(std::size_t a) const {
    return {atom_pos_.data() + a * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const double> atom_positions() const { return atom_pos_; }
  double atom_weight(std::size_t a) const { return atom_weight_[a]; }
  std::span<const double> atom_weights() const { return atom_weight_; }
  std::uint32_t atom_cell(std::size_t a) const { return atom_cell_[a]; }
  std::span<const std::uint32_t> atom_cells() const { return atom_cell_; }

  double total_mass() const { return total_; }
  double mass_unit() const { return unit_; }

  std::optional<std::size_t> locate(std::span<const double> x) const;
  double local_density(std::span<const double> x) const;

  // Center of the atom bounding box and the largest atom distance from it.
  Point support_center() const;
  double support_radius() const;

  GridMeasure scaled(double t) const;
  GridMeasure dilated(double lambda) const;
  // Cell j mass multiplied by factors[j], requantized.
  GridMeasure reweighted(std::span<const double> factors) const;
  // Keeps the listed atoms (ascending indices); cells without atoms vanish.
  GridMeasure subset(std::span<const std::uint32_t> atoms) const;

  const Point& lattice_anchor() const { return anchor_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const;
  };
  std::vector<std::int64_t> lattice_key(std::span<const double> x) const;
  void rebuild_index();
  void finish();

  int dim_ = 0;
  double side_ = 1.0;
  int subsample_ = 1;
  double unit_ = 0.0;
  double total_ = 0.0;
  Point anchor_;
  std::vector<double> centers_;
  std::vector<double> cell_mass_;
  std::vector<double> atom_pos_;
  std::vector<double> atom_weight_;
  std::vector<std::uint32_t> atom_cell_;
  std::unordered_map<std::vector<std::int64_t>, std::uint32_t, KeyHash> index_;
};

GridMeasure build_grid_measure(const MeasureSpec& spec);

double ball_mass(const GridMeasure& m, std::span<const double> x, double rho);
double cube_mass(const GridMeasure& m, const DyadicCube& q);
std::vector<std::uint32_t> atoms_in_ball(const GridMeasure& m, const Ball& b);
std::vector<std::uint32_t> atoms_in_cube(const GridMeasure& m, const DyadicCube& q);
GridMeasure restrict_to(const GridMeasure& m, const Ball& b);
GridMeasure restrict_to(const GridMeasure& m, const DyadicCube& q);

// Closed-ball mass as a right-continuous step function of the radius.
struct RadialMassProfile {
  std::vector<double> radii;       // distinct atom distances, ascending
  std::vector<double> cumulative;  // mass of the closed ball of radius radii[i]
  double local_density = 0.0;      // density of the cell containing x
  double near_radius = 0.0;

  double mass_within(double rho) const;
  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
  double cover_radius() const { return radii.empty() ? 0.0 : radii.back(); }
};

RadialMassProfile radial_profile(const GridMeasure& m, std::span<const double> x);

// (index, distance) of every atom sorted by distance, ties by index.
struct SortedAtoms {
  std::vector<std::uint32_t> index;
  std::vector<double> distance;
};
SortedAtoms sort_atoms_by_distance(const GridMeasure& m, std::span<const double> x);

void write_measure_csv(const GridMeasure& m, std::ostream& out);
GridMeasure read_measure_csv(std::istream& in);
GridMeasure read_measure_csv_file(const std::string& path);

}  // namespace wolffkit
