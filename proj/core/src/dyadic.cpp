#include "wolffkit/dyadic.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace wolffkit {

std::int64_t floor_shift(std::int64_t k, int shift) { return k >> shift; }

std::int64_t dyadic_index(double x, int level) {
  if (level < kMinDyadicLevel || level > kMaxDyadicLevel) throw InvalidArgument("dyadic level out of range");
  if (!std::isfinite(x)) throw InvalidArgument("non-finite coordinate");
  double v = std::floor(std::ldexp(x, level));
  if (std::abs(v) >= 0x1.0p62) throw InvalidArgument("coordinate too large for dyadic level");
  return static_cast<std::int64_t>(v);
}

DyadicCube cube_of(std::span<const double> x, int level) {
  DyadicCube q;
  q.level = level;
  q.k.resize(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) q.k[d] = dyadic_index(x[d], level);
  return q;
}

double DyadicCube::side() const { return std::ldexp(1.0, -level); }
double DyadicCube::volume() const { return std::ldexp(1.0, -level * dim()); }

DyadicCube DyadicCube::parent() const { return ancestor(level - 1); }

DyadicCube DyadicCube::ancestor(int coarser_level) const {
  if (coarser_level > level) throw InvalidArgument("ancestor level must not be finer");
  DyadicCube a;
  a.level = coarser_level;
  a.k.resize(k.size());
  for (std::size_t d = 0; d < k.size(); ++d) a.k[d] = floor_shift(k[d], level - coarser_level);
  return a;
}

std::vector<DyadicCube> DyadicCube::children() const {
  const int n = dim();
  std::vector<DyadicCube> out;
  out.reserve(std::size_t{1} << n);
  for (int mask = 0; mask < (1 << n); ++mask) {
    DyadicCube c;
    c.level = level + 1;
    c.k.resize(n);
    for (int d = 0; d < n; ++d) c.k[d] = 2 * k[d] + ((mask >> d) & 1);
    out.push_back(std::move(c));
  }
  return out;
}

bool DyadicCube::contains(std::span<const double> x) const {
  if (x.size() != k.size()) throw InvalidArgument("point has wrong dimension");
  for (std::size_t d = 0; d < k.size(); ++d)
    if (dyadic_index(x[d], level) != k[d]) return false;
  return true;
}

bool DyadicCube::contains(const DyadicCube& other) const {
  if (other.k.size() != k.size()) throw InvalidArgument("cube has wrong dimension");
  if (other.level < level) return false;
  return other.ancestor(level).k == k;
}

std::string DyadicCube::id() const {
  std::string s = std::to_string(level) + ":";
  for (std::size_t d = 0; d < k.size(); ++d) {
    if (d) s += ',';
    s += std::to_string(k[d]);
  }
  return s;
}

DyadicCube parse_cube_id(const std::string& id) {
  auto colon = id.find(':');
  if (colon == std::string::npos) throw InvalidArgument("cube id must look like level:k1,...,kn");
  DyadicCube q;
  try {
    q.level = std::stoi(id.substr(0, colon));
    std::stringstream ss(id.substr(colon + 1));
    std::string part;
    while (std::getline(ss, part, ',')) q.k.push_back(std::stoll(part));
  } catch (const std::exception&) {
    throw InvalidArgument("malformed cube id '" + id + "'");
  }
  if (q.k.empty()) throw InvalidArgument("cube id has no coordinates");
  return q;
}

int orthant_of(std::span<const double> x) {
  int o = 0;
  for (std::size_t d = 0; d < x.size(); ++d)
    if (x[d] >= 0.0) o |= 1 << d;
  return o;
}

namespace {

int orthant_of_cube(const DyadicCube& q) {
  int o = 0;
  for (std::size_t d = 0; d < q.k.size(); ++d)
    if (q.k[d] >= 0) o |= 1 << d;
  return o;
}

struct OrthantBox {
  std::vector<double> lo, hi;
  double mass = 0.0;
};

std::map<int, OrthantBox> orthant_boxes(const GridMeasure& m) {
  std::map<int, OrthantBox> out;
  const int n = m.dim();
  for (std::size_t a = 0; a < m.atom_count(); ++a) {
    auto y = m.atom(a);
    auto& b = out[orthant_of(y)];
    if (b.lo.empty()) {
      b.lo.assign(y.begin(), y.end());
      b.hi = b.lo;
    }
    for (int d = 0; d < n; ++d) {
      b.lo[d] = std::min(b.lo[d], y[d]);
      b.hi[d] = std::max(b.hi[d], y[d]);
    }
    b.mass += m.atom_weight(a);
  }
  return out;
}

double level_term(double mass, int j, const Params& prm, DyadicKind kind) {
  if (mass <= 0.0) return 0.0;
  if (kind == DyadicKind::Wolff) return std::pow(mass, prm.wolff_exponent()) * std::exp2(j * prm.gamma());
  return mass * std::exp2(j * (prm.n - prm.alpha));
}

double level_rate(const Params& prm, DyadicKind kind) {
  return kind == DyadicKind::Wolff ? prm.gamma() : prm.n - prm.alpha;
}

double mass_at_level(const GridMeasure& m, const DyadicCube& q) {
  double s = 0.0;
  const int n = m.dim();
  for (std::size_t a = 0; a < m.atom_count(); ++a) {
    auto y = m.atom(a);
    bool in = true;
    for (int d = 0; d < n && in; ++d) in = dyadic_index(y[d], q.level) == q.k[d];
    if (in) s += m.atom_weight(a);
  }
  return s;
}

void check(const GridMeasure& m, const Params& prm, std::span<const double> x) {
  prm.validate_kernel();
  if (prm.n != m.dim()) throw InvalidArgument("params dimension does not match the measure");
  if (static_cast<int>(x.size()) != m.dim()) throw InvalidArgument("point has wrong dimension");
}

}  // namespace

double dyadic_wolff(const GridMeasure& m, const Params& prm, std::span<const double> x, int j_min, int j_max,
                    DyadicKind kind, bool coarse_tail) {
  check(m, prm, x);
  if (j_min > j_max) throw InvalidArgument("j_min must be <= j_max");
  double acc = 0.0;
  for (int j = j_min; j <= j_max; ++j) acc += level_term(mass_at_level(m, cube_of(x, j)), j, prm, kind);
  if (!coarse_tail || m.empty()) return acc;
  auto boxes = orthant_boxes(m);
  auto it = boxes.find(orthant_of(x));
  if (it == boxes.end()) return acc;
  const double rate = level_rate(prm, kind);
  for (int j = j_min - 1; j >= kMinDyadicLevel; --j) {
    DyadicCube q = cube_of(x, j);
    if (q.contains(it->second.lo) && q.contains(it->second.hi)) {
      if (!(rate > 0.0)) return kInf;
      return acc + level_term(it->second.mass, j, prm, kind) / (1.0 - std::exp2(-rate));
    }
    acc += level_term(mass_at_level(m, q), j, prm, kind);
  }
  throw NumericFailure("coarse tail did not stabilize");
}

double dyadic_wolff_rooted(const GridMeasure& m, const Params& prm, std::span<const double> x, const DyadicCube& root,
                           int j_max, DyadicKind kind) {
  check(m, prm, x);
  if (root.dim() != m.dim()) throw InvalidArgument("root cube has wrong dimension");
  if (!root.contains(x)) throw InvalidArgument("point is not inside the root cube");
  double acc = 0.0;
  for (int j = root.level; j <= j_max; ++j) acc += level_term(mass_at_level(m, cube_of(x, j)), j, prm, kind);
  return acc;
}

int stabilization_level(const GridMeasure& m, int j_fine) {
  auto boxes = orthant_boxes(m);
  int level = j_fine;
  for (const auto& [o, b] : boxes) {
    int j = j_fine;
    while (cube_of(b.lo, j) != cube_of(b.hi, j)) {
      --j;
      if (j < kMinDyadicLevel) throw NumericFailure("support does not fit a dyadic cube");
    }
    level = std::min(level, j);
  }
  return level;
}

namespace {

double table_term(const Params& prm, double kappa, int j) {
  if (kappa <= 0.0) return 0.0;
  return std::pow(kappa, prm.kappa_root_exponent()) * std::exp2(j * prm.gamma());
}

// Levels coarser than j_min from a positive level-j_min cube C in the same
// orthant as the cube `from` (at level <= j_min).
double coarse_continuation(const KappaTable& kt, const Params& prm, const DyadicCube& from) {
  for (const auto& [c, kap] : kt.cubes) {
    if (c.level != kt.j_min || kap <= 0.0) continue;
    if (orthant_of_cube(c) != orthant_of_cube(from)) continue;
    int start = std::min(kt.j_min - 1, from.level);
    for (int j = start; j >= kMinDyadicLevel; --j) {
      if (c.ancestor(j) == from.ancestor(j)) {
        if (!(prm.gamma() > 0.0)) return kInf;
        return table_term(prm, kap, j) / (1.0 - std::exp2(-prm.gamma()));
      }
    }
    throw NumericFailure("coarse continuation did not meet the support cube");
  }
  return 0.0;
}

}  // namespace

double dyadic_intrinsic(const KappaTable& kt, const Params& prm, std::span<const double> x,
                        const std::optional<DyadicCube>& root) {
  if (!kt.has_cubes) throw IncompleteTable("table has no dyadic entries");
  if (static_cast<int>(x.size()) != prm.n) throw InvalidArgument("point has wrong dimension");
  int lo = kt.j_min;
  if (root) {
    if (!root->contains(x)) throw InvalidArgument("point is not inside the root cube");
    if (root->level < kt.j_min) throw IncompleteTable("root cube is coarser than the table");
    lo = root->level;
  }
  double acc = 0.0;
  for (int j = lo; j <= kt.j_max; ++j) acc += table_term(prm, kt.cube_kappa(cube_of(x, j)), j);
  if (!root && kt.coarse_stable) acc += coarse_continuation(kt, prm, cube_of(x, kt.j_min));
  return acc;
}

DyadicTailReport dyadic_tail_test(const KappaTable& kt, const Params& prm, const DyadicCube& p) {
  if (!kt.has_cubes) throw IncompleteTable("table has no dyadic entries");
  if (p.level > kt.j_max) throw InvalidArgument("cube is finer than the table");
  if (!kt.coarse_stable) throw IncompleteTable("levels coarser than j_min are unknown for this table");
  DyadicTailReport rep;
  for (int j = p.level; j >= kt.j_min; --j) {
    rep.value += table_term(prm, kt.cube_kappa(p.ancestor(j)), j);
    ++rep.explicit_levels;
  }
  rep.value += coarse_continuation(kt, prm, p.level < kt.j_min ? p : p.ancestor(kt.j_min));
  rep.finite = std::isfinite(rep.value);
  return rep;
}

}  // namespace wolffkit
