#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wolffkit {

// Half-open cube prod_i [k_i 2^-j, (k_i + 1) 2^-j).
struct DyadicCube {
  int level = 0;
  std::vector<std::int64_t> k;

  int dim() const { return static_cast<int>(k.size()); }
  double side() const;
  double volume() const;
  DyadicCube parent() const;
  DyadicCube ancestor(int coarser_level) const;
  std::vector<DyadicCube> children() const;
  bool contains(std::span<const double> x) const;
  bool contains(const DyadicCube& other) const;
  std::string id() const;

  auto operator<=>(const DyadicCube&) const = default;
};

// Levels are limited so that x * 2^j stays exact and inside int64 range.
inline constexpr int kMaxDyadicLevel = 40;
inline constexpr int kMinDyadicLevel = -60;

// Exact floor(x 2^j): the scaling by a power of two never rounds.
std::int64_t dyadic_index(double x, int level);
DyadicCube cube_of(std::span<const double> x, int level);
DyadicCube parse_cube_id(const std::string& id);
std::int64_t floor_shift(std::int64_t k, int shift);

}  // namespace wolffkit
