#include "wolffkit/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "wolffkit/format.hpp"
#include "wolffkit/params.hpp"

namespace wolffkit {

namespace {

// Integer counts of `unit` approximating raw (scaled to target when target > 0),
// with the total rounded once and the rest apportioned by largest remainder.
struct Quantized {
  double unit = 0.0;
  std::vector<std::int64_t> counts;
};

Quantized quantize(std::span<const double> raw, double target) {
  Quantized out;
  out.counts.assign(raw.size(), 0);
  long double raw_total = 0.0L;
  for (double v : raw) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("masses must be finite and >= 0");
    raw_total += v;
  }
  if (raw_total == 0.0L) return out;
  const double total = target > 0.0 ? target : static_cast<double>(raw_total);
  int e = 0;
  std::frexp(total, &e);  // total <= 2^e
  out.unit = std::ldexp(1.0, e - 52);
  const long double scale = static_cast<long double>(total) / raw_total / out.unit;
  const auto wanted = static_cast<std::int64_t>(std::llround(static_cast<long double>(total) / out.unit));
  std::vector<long double> rem(raw.size());
  std::int64_t have = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    long double x = raw[i] * scale;
    long double f = std::floor(x);
    out.counts[i] = static_cast<std::int64_t>(f);
    rem[i] = x - f;
    have += out.counts[i];
  }
  std::int64_t deficit = wanted - have;
  if (deficit != 0) {
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    if (deficit > 0) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
      for (std::size_t i = 0; deficit > 0; i = (i + 1) % order.size()) {
        if (raw[order[i]] > 0.0) {
          ++out.counts[order[i]];
          --deficit;
        }
      }
    } else {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] < rem[b]; });
      for (std::size_t i = 0; deficit < 0; i = (i + 1) % order.size()) {
        if (out.counts[order[i]] > 0) {
          --out.counts[order[i]];
          ++deficit;
        }
      }
    }
  }
  return out;
}

// Kronecker offsets in (-1/2, 1/2)^dim built from the generalized golden ratio.
std::vector<double> atom_offsets(int dim, int s) {
  double g = 2.0;
  for (int it = 0; it < 100; ++it) {
    double f = std::pow(g, dim + 1) - g - 1.0;
    double df = (dim + 1) * std::pow(g, dim) - 1.0;
    g -= f / df;
  }
  std::vector<double> a(dim);
  for (int d = 0; d < dim; ++d) {
    double v = std::pow(1.0 / g, d + 1);
    a[d] = v - std::floor(v);
  }
  const double delta = 0.3819660112501051;  // 2 - golden ratio
  std::vector<double> out(static_cast<std::size_t>(s) * dim);
  for (int i = 0; i < s; ++i) {
    for (int d = 0; d < dim; ++d) {
      double v = 0.5 + (i + delta) * a[d];
      out[static_cast<std::size_t>(i) * dim + d] = (v - std::floor(v)) - 0.5;
    }
  }
  return out;
}

bool on_dyadic_face(double x) {
  double v = std::ldexp(x, 30);
  return v == std::floor(v);
}

double nudge_off_faces(double x) {
  while (on_dyadic_face(x)) x = std::nextafter(x, kInf);
  return x;
}

}  // namespace

std::string to_string(MeasureSpec::Kind kind) {
  switch (kind) {
    case MeasureSpec::Kind::Empty: return "empty";
    case MeasureSpec::Kind::UniformBall: return "uniform-ball";
    case MeasureSpec::Kind::RadialPower: return "radial-power";
    case MeasureSpec::Kind::RandomCells: return "random-cells";
    case MeasureSpec::Kind::File: return "file";
  }
  return "?";
}

MeasureSpec::Kind measure_kind_from_string(const std::string& s) {
  if (s == "empty") return MeasureSpec::Kind::Empty;
  if (s == "uniform-ball") return MeasureSpec::Kind::UniformBall;
  if (s == "radial-power") return MeasureSpec::Kind::RadialPower;
  if (s == "random-cells") return MeasureSpec::Kind::RandomCells;
  if (s == "file") return MeasureSpec::Kind::File;
  throw InvalidArgument("unknown measure kind '" + s + "'");
}

std::size_t GridMeasure::KeyHash::operator()(const std::vector<std::int64_t>& k) const {
  std::uint64_t h = 1469598103934665603ull;
  for (auto v : k) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

GridMeasure::GridMeasure(int dim, double side) : dim_(dim), side_(side), anchor_(dim, 0.0) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  if (!(side > 0.0)) throw InvalidArgument("cell side must be > 0");
}

double GridMeasure::cell_volume() const { return std::pow(side_, dim_); }
double GridMeasure::near_radius() const { return side_ * std::sqrt(static_cast<double>(dim_)); }

std::vector<std::int64_t> GridMeasure::lattice_key(std::span<const double> x) const {
  std::vector<std::int64_t> key(dim_);
  for (int d = 0; d < dim_; ++d) key[d] = static_cast<std::int64_t>(std::floor((x[d] - anchor_[d]) / side_));
  return key;
}

void GridMeasure::rebuild_index() {
  index_.clear();
  index_.reserve(cell_mass_.size());
  for (std::size_t j = 0; j < cell_mass_.size(); ++j) {
    auto [it, fresh] = index_.emplace(lattice_key(cell_center(j)), static_cast<std::uint32_t>(j));
    if (!fresh) throw InvalidArgument("two cells share one lattice position");
  }
}

void GridMeasure::finish() {
  cell_mass_.assign(centers_.size() / dim_, 0.0);
  for (std::size_t a = 0; a < atom_weight_.size(); ++a) cell_mass_[atom_cell_[a]] += atom_weight_[a];
  total_ = 0.0;
  for (double v : cell_mass_) total_ += v;
  rebuild_index();
}

GridMeasure GridMeasure::from_cells(int dim, double side, int subsample, std::span<const double> centers,
                                    std::span<const double> masses, double target_total) {
  GridMeasure out(dim, side);
  if (subsample < 1) throw InvalidArgument("subsample must be >= 1");
  if (centers.size() != masses.size() * static_cast<std::size_t>(dim))
    throw InvalidArgument("cell centers and masses disagree in length");
  out.subsample_ = subsample;
  Quantized qz = quantize(masses, target_total);
  out.unit_ = qz.unit;
  std::size_t first = masses.size();
  for (std::size_t j = 0; j < masses.size(); ++j)
    if (qz.counts[j] > 0) {
      first = j;
      break;
    }
  if (first == masses.size()) {
    out.rebuild_index();
    return out;
  }
  for (int d = 0; d < dim; ++d) out.anchor_[d] = centers[first * dim + d] - 0.5 * side;
  const std::vector<double> offs = atom_offsets(dim, subsample);
  for (std::size_t j = 0; j < masses.size(); ++j) {
    if (qz.counts[j] == 0) continue;
    auto c = centers.subspan(j * dim, dim);
    for (int d = 0; d < dim; ++d) {
      double k = (c[d] - out.anchor_[d]) / side - 0.5;
      if (std::abs(k - std::round(k)) > 1e-6) throw InvalidArgument("cell centers are not on one lattice");
    }
    const auto cell = static_cast<std::uint32_t>(out.centers_.size() / dim);
    out.centers_.insert(out.centers_.end(), c.begin(), c.end());
    const std::int64_t base = qz.counts[j] / subsample;
    const std::int64_t extra = qz.counts[j] % subsample;
    for (int i = 0; i < subsample; ++i) {
      std::int64_t cnt = base + (i < extra ? 1 : 0);
      if (cnt == 0) continue;
      for (int d = 0; d < dim; ++d)
        out.atom_pos_.push_back(nudge_off_faces(c[d] + offs[static_cast<std::size_t>(i) * dim + d] * side));
      out.atom_weight_.push_back(static_cast<double>(cnt) * qz.unit);
      out.atom_cell_.push_back(cell);
    }
  }
  out.finish();
  return out;
}

GridMeasure GridMeasure::from_point_masses(int dim, double side, std::span<const double> points,
                                           std::span<const double> masses) {
  GridMeasure out(dim, side);
  if (points.size() != masses.size() * static_cast<std::size_t>(dim))
    throw InvalidArgument("points and masses disagree in length");
  out.subsample_ = 0;
  Quantized qz = quantize(masses, 0.0);
  out.unit_ = qz.unit;
  std::vector<std::size_t> order;
  for (std::size_t a = 0; a < masses.size(); ++a)
    if (qz.counts[a] > 0) order.push_back(a);
  std::vector<std::vector<std::int64_t>> keys(masses.size());
  for (std::size_t a : order) keys[a] = out.lattice_key(points.subspan(a * dim, dim));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });
  const std::vector<std::int64_t>* prev = nullptr;
  for (std::size_t a : order) {
    if (!prev || keys[a] != *prev) {
      for (int d = 0; d < dim; ++d) out.centers_.push_back((static_cast<double>(keys[a][d]) + 0.5) * side);
      prev = &keys[a];
    }
    auto x = points.subspan(a * dim, dim);
    out.atom_pos_.insert(out.atom_pos_.end(), x.begin(), x.end());
    out.atom_weight_.push_back(static_cast<double>(qz.counts[a]) * qz.unit);
    out.atom_cell_.push_back(static_cast<std::uint32_t>(out.centers_.size() / dim - 1));
  }
  out.finish();
  return out;
}

std::optional<std::size_t> GridMeasure::locate(std::span<const double> x) const {
  if (empty()) return std::nullopt;
  auto it = index_.find(lattice_key(x));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double GridMeasure::local_density(std::span<const double> x) const {
  auto j = locate(x);
  return j ? cell_mass_[*j] / cell_volume() : 0.0;
}

Point GridMeasure::support_center() const {
  Point c(dim_, 0.0);
  if (atom_weight_.empty()) return c;
  Point lo(atom_pos_.begin(), atom_pos_.begin() + dim_), hi = lo;
  for (std::size_t a = 0; a < atom_count(); ++a)
    for (int d = 0; d < dim_; ++d) {
      lo[d] = std::min(lo[d], atom_pos_[a * dim_ + d]);
      hi[d] = std::max(hi[d], atom_pos_[a * dim_ + d]);
    }
  for (int d = 0; d < dim_; ++d) c[d] = 0.5 * (lo[d] + hi[d]);
  return c;
}

double GridMeasure::support_radius() const {
  Point c = support_center();
  double r2 = 0.0;
  for (std::size_t a = 0; a < atom_count(); ++a) {
    double s = 0.0;
    for (int d = 0; d < dim_; ++d) s += (atom_pos_[a * dim_ + d] - c[d]) * (atom_pos_[a * dim_ + d] - c[d]);
    r2 = std::max(r2, s);
  }
  return std::sqrt(r2);
}

GridMeasure GridMeasure::scaled(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("scale factor must be finite and >= 0");
  std::vector<double> raw(atom_weight_);
  for (double& w : raw) w *= t;
  GridMeasure out = *this;
  Quantized qz = quantize(raw, t * total_);
  if (qz.counts.empty() || qz.unit == 0.0) return GridMeasure(dim_, side_);
  std::vector<std::uint32_t> keep;
  for (std::size_t a = 0; a < raw.size(); ++a) {
    out.atom_weight_[a] = static_cast<double>(qz.counts[a]) * qz.unit;
    if (qz.counts[a] > 0) keep.push_back(static_cast<std::uint32_t>(a));
  }
  out.unit_ = qz.unit;
  out.finish();
  return keep.size() == raw.size() ? out : out.subset(keep);
}

GridMeasure GridMeasure::reweighted(std::span<const double> factors) const {
  if (factors.size() != cell_count()) throw InvalidArgument("one factor per cell required");
  std::vector<double> raw(atom_weight_);
  for (std::size_t a = 0; a < raw.size(); ++a) raw[a] *= factors[atom_cell_[a]];
  GridMeasure out = *this;
  Quantized qz = quantize(raw, 0.0);
  if (qz.unit == 0.0) return GridMeasure(dim_, side_);
  std::vector<std::uint32_t> keep;
  for (std::size_t a = 0; a < raw.size(); ++a) {
    out.atom_weight_[a] = static_cast<double>(qz.counts[a]) * qz.unit;
    if (qz.counts[a] > 0) keep.push_back(static_cast<std::uint32_t>(a));
  }
  out.unit_ = qz.unit;
  out.finish();
  return keep.size() == raw.size() ? out : out.subset(keep);
}

GridMeasure GridMeasure::dilated(double lambda) const {
  if (!(lambda > 0.0)) throw InvalidArgument("dilation factor must be > 0");
  GridMeasure out = *this;
  out.side_ *= lambda;
  for (double& v : out.anchor_) v *= lambda;
  for (double& v : out.centers_) v *= lambda;
  for (double& v : out.atom_pos_) v *= lambda;
  out.rebuild_index();
  return out;
}

GridMeasure GridMeasure::subset(std::span<const std::uint32_t> atoms) const {
  GridMeasure out(dim_, side_);
  out.subsample_ = subsample_;
  out.unit_ = unit_;
  out.anchor_ = anchor_;
  std::vector<std::int64_t> remap(cell_count(), -1);
  std::uint32_t prev = 0;
  bool first = true;
  for (std::uint32_t a : atoms) {
    if (a >= atom_count()) throw InvalidArgument("atom index out of range");
    if (!first && a <= prev) throw InvalidArgument("atom indices must be strictly ascending");
    first = false;
    prev = a;
    const std::uint32_t c = atom_cell_[a];
    if (remap[c] < 0) {
      remap[c] = static_cast<std::int64_t>(out.centers_.size() / dim_);
      auto cc = cell_center(c);
      out.centers_.insert(out.centers_.end(), cc.begin(), cc.end());
    }
    auto x = atom(a);
    out.atom_pos_.insert(out.atom_pos_.end(), x.begin(), x.end());
    out.atom_weight_.push_back(atom_weight_[a]);
    out.atom_cell_.push_back(static_cast<std::uint32_t>(remap[c]));
  }
  out.finish();
  return out;
}

namespace {

struct Box {
  std::vector<double> lo;
  std::vector<int> cells;
  double side = 0.0;
};

Box grid_box(const MeasureSpec& spec, const Point& center) {
  const int n = spec.dim;
  Point lo = spec.box_lo, hi = spec.box_hi;
  if (lo.empty()) {
    lo.resize(n);
    for (int d = 0; d < n; ++d) lo[d] = center[d] - spec.radius;
  }
  if (hi.empty()) {
    hi.resize(n);
    for (int d = 0; d < n; ++d) hi[d] = center[d] + spec.radius;
  }
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
    throw InvalidArgument("grid box has wrong dimension");
  if (spec.cells < 1) throw InvalidArgument("cells per axis must be >= 1");
  Box b;
  b.lo = lo;
  b.side = (hi[0] - lo[0]) / spec.cells;
  if (!(b.side > 0.0)) throw InvalidArgument("grid box must have positive extent");
  for (int d = 0; d < n; ++d) {
    double k = (hi[d] - lo[d]) / b.side;
    int kc = static_cast<int>(std::llround(k));
    if (kc < 1 || std::abs(k - kc) > 1e-9 * std::max(1.0, k)) throw InvalidArgument("grid box must tile into cubes");
    b.cells.push_back(kc);
  }
  return b;
}

template <class F>
void for_each_cell(const Box& b, F&& f) {
  const int n = static_cast<int>(b.cells.size());
  std::vector<int> idx(n, 0);
  std::vector<double> c(n);
  for (;;) {
    for (int d = 0; d < n; ++d) c[d] = b.lo[d] + (idx[d] + 0.5) * b.side;
    f(idx, c);
    int d = n - 1;
    while (d >= 0 && ++idx[d] == b.cells[d]) idx[d--] = 0;
    if (d < 0) break;
  }
}

// Nearest and farthest distance from p to the cube [c - h/2, c + h/2]^n.
void cube_distance_range(std::span<const double> c, double h, std::span<const double> p, double& dn, double& df) {
  double sn = 0.0, sf = 0.0;
  for (std::size_t d = 0; d < c.size(); ++d) {
    double off = std::abs(p[d] - c[d]);
    double near = std::max(0.0, off - 0.5 * h);
    double far = off + 0.5 * h;
    sn += near * near;
    sf += far * far;
  }
  dn = std::sqrt(sn);
  df = std::sqrt(sf);
}

template <class F>
void for_each_child(std::span<const double> c, double h, F&& f) {
  const int n = static_cast<int>(c.size());
  std::vector<double> cc(n);
  for (int mask = 0; mask < (1 << n); ++mask) {
    for (int d = 0; d < n; ++d) cc[d] = c[d] + ((mask >> d & 1) ? 0.25 : -0.25) * h;
    f(std::span<const double>(cc));
  }
}

double ball_fraction(std::span<const double> c, double h, std::span<const double> center, double radius, int depth) {
  double dn, df;
  cube_distance_range(c, h, center, dn, df);
  if (df <= radius) return 1.0;
  if (dn >= radius) return 0.0;
  if (depth == 0) {
    double s = 0.0;
    for (std::size_t d = 0; d < c.size(); ++d) s += (c[d] - center[d]) * (c[d] - center[d]);
    return std::sqrt(s) <= radius ? 1.0 : 0.0;
  }
  double acc = 0.0;
  for_each_child(c, h, [&](std::span<const double> cc) { acc += ball_fraction(cc, 0.5 * h, center, radius, depth - 1); });
  return acc / static_cast<double>(1 << c.size());
}

double radial_cell_mass(std::span<const double> c, double h, std::span<const double> center, double rin, double rout,
                        double s, int depth) {
  const int n = static_cast<int>(c.size());
  double dn, df;
  cube_distance_range(c, h, center, dn, df);
  if (dn >= rout || df < rin) return 0.0;
  const double vol = std::pow(h, n);
  const bool inside = dn >= rin && df <= rout;
  const bool near_singular = s != 0.0 && dn < 2.0 * h * std::sqrt(static_cast<double>(n));
  if (inside && !near_singular) {
    static const double g[2] = {-0.5773502691896257, 0.5773502691896257};
    double acc = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
      double r2 = 0.0;
      for (int d = 0; d < n; ++d) {
        double x = c[d] + 0.5 * h * g[mask >> d & 1] - center[d];
        r2 += x * x;
      }
      acc += std::pow(r2, -0.5 * s);
    }
    return vol * acc / static_cast<double>(1 << n);
  }
  if (depth == 0) {
    if (dn == 0.0 && rin == 0.0) {
      double rho = std::pow(vol / unit_ball_volume(n), 1.0 / n);
      return unit_sphere_area(n) * std::pow(rho, n - s) / (n - s);
    }
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) r2 += (c[d] - center[d]) * (c[d] - center[d]);
    double r = std::sqrt(r2);
    return (r >= rin && r <= rout && r > 0.0) ? vol * std::pow(r, -s) : 0.0;
  }
  double acc = 0.0;
  for_each_child(c, h, [&](std::span<const double> cc) {
    acc += radial_cell_mass(cc, 0.5 * h, center, rin, rout, s, depth - 1);
  });
  return acc;
}

}  // namespace

GridMeasure build_grid_measure(const MeasureSpec& spec) {
  const int n = spec.dim;
  if (n < 1) throw InvalidArgument("dimension must be >= 1");
  if (spec.kind == MeasureSpec::Kind::File) {
    GridMeasure m = read_measure_csv_file(spec.path);
    if (m.dim() != n) throw InvalidArgument("measure file dimension does not match spec");
    return m;
  }
  Point center = spec.center.empty() ? Point(n, 0.0) : spec.center;
  if (static_cast<int>(center.size()) != n) throw InvalidArgument("center has wrong dimension");
  if (!(spec.total_mass >= 0.0)) throw InvalidArgument("total mass must be >= 0");
  if (spec.subsample < 1) throw InvalidArgument("subsample must be >= 1");
  if (spec.kind == MeasureSpec::Kind::Empty || spec.total_mass == 0.0) {
    Box b = grid_box(spec, center);
    return GridMeasure(n, b.side);
  }
  Box b = grid_box(spec, center);
  std::vector<double> centers, masses;
  switch (spec.kind) {
    case MeasureSpec::Kind::UniformBall: {
      if (!(spec.radius > 0.0)) throw InvalidArgument("ball radius must be > 0");
      const int depth = n == 1 ? 12 : std::clamp(12 / (n - 1), 2, 10);
      for_each_cell(b, [&](const std::vector<int>&, const std::vector<double>& c) {
        double f = ball_fraction(c, b.side, center, spec.radius, depth);
        if (f > 0.0) {
          centers.insert(centers.end(), c.begin(), c.end());
          masses.push_back(f);
        }
      });
      break;
    }
    case MeasureSpec::Kind::RadialPower: {
      if (!(spec.radius > spec.inner_radius) || spec.inner_radius < 0.0)
        throw InvalidArgument("radial-power needs 0 <= inner_radius < radius");
      if (spec.inner_radius == 0.0 && !(spec.exponent < n))
        throw InvalidArgument("radial-power exponent must be < n when the annulus reaches the center");
      const int depth = std::clamp(18 / n, 2, 8);
      for_each_cell(b, [&](const std::vector<int>&, const std::vector<double>& c) {
        double v = radial_cell_mass(c, b.side, center, spec.inner_radius, spec.radius, spec.exponent, depth);
        if (v > 0.0) {
          centers.insert(centers.end(), c.begin(), c.end());
          masses.push_back(v);
        }
      });
      break;
    }
    case MeasureSpec::Kind::RandomCells: {
      const int blocks = spec.blocks > 0 ? spec.blocks : spec.cells;
      std::vector<int> bdims(n);
      std::size_t nb = 1;
      for (int d = 0; d < n; ++d) {
        bdims[d] = std::max(1, static_cast<int>(std::llround(static_cast<double>(b.cells[d]) * blocks / spec.cells)));
        nb *= static_cast<std::size_t>(bdims[d]);
      }
      std::mt19937_64 rng(spec.seed);
      auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
      std::vector<double> density(nb);
      for (auto& v : density) {
        double u = uniform();
        double w = 0.1 + 0.9 * uniform();
        v = u < spec.sparsity ? 0.0 : w;
      }
      for_each_cell(b, [&](const std::vector<int>& idx, const std::vector<double>& c) {
        std::size_t flat = 0;
        for (int d = 0; d < n; ++d) {
          auto bi = static_cast<std::size_t>(static_cast<long long>(idx[d]) * bdims[d] / b.cells[d]);
          flat = flat * static_cast<std::size_t>(bdims[d]) + bi;
        }
        if (density[flat] > 0.0) {
          centers.insert(centers.end(), c.begin(), c.end());
          masses.push_back(density[flat]);
        }
      });
      break;
    }
    default:
      throw InvalidArgument("unsupported measure kind");
  }
  if (masses.empty()) return GridMeasure(n, b.side);
  return GridMeasure::from_cells(n, b.side, spec.subsample, centers, masses, spec.total_mass);
}

double ball_mass(const GridMeasure& m, std::span<const double> x, double rho) {
  if (static_cast<int>(x.size()) != m.dim()) throw InvalidArgument("point has wrong dimension");
  if (!(rho >= 0.0)) throw InvalidArgument("radius must be >= 0");
  const int n = m.dim();
  double s = 0.0;
  for (std::size_t a = 0; a < m.atom_count(); ++a) {
    auto y = m.atom(a);
    double d2 = 0.0;
    for (int d = 0; d < n; ++d) d2 += (y[d] - x[d]) * (y[d] - x[d]);
    // Distances rather than squares, so membership agrees with the sorted radii.
    if (std::sqrt(d2) <= rho) s += m.atom_weight(a);
  }
  return s;
}

std::vector<std::uint32_t> atoms_in_ball(const GridMeasure& m, const Ball& b) {
  if (static_cast<int>(b.center.size()) != m.dim()) throw InvalidArgument("ball center has wrong dimension");
  if (!(b.radius >= 0.0)) throw InvalidArgument("radius must be >= 0");
  const int n = m.dim();
  std::vector<std::uint32_t> out;
  for (std::size_t a = 0; a < m.atom_count(); ++a) {
    auto y = m.atom(a);
    double d2 = 0.0;
    for (int d = 0; d < n; ++d) d2 += (y[d] - b.center[d]) * (y[d] - b.center[d]);
    if (std::sqrt(d2) <= b.radius) out.push_back(static_cast<std::uint32_t>(a));
  }
  return out;
}

std::vector<std::uint32_t> atoms_in_cube(const GridMeasure& m, const DyadicCube& q) {
  if (q.dim() != m.dim()) throw InvalidArgument("cube has wrong dimension");
  std::vector<std::uint32_t> out;
  for (std::size_t a = 0; a < m.atom_count(); ++a)
    if (q.contains(m.atom(a))) out.push_back(static_cast<std::uint32_t>(a));
  return out;
}

double cube_mass(const GridMeasure& m, const DyadicCube& q) {
  double s = 0.0;
  for (std::uint32_t a : atoms_in_cube(m, q)) s += m.atom_weight(a);
  return s;
}

GridMeasure restrict_to(const GridMeasure& m, const Ball& b) { return m.subset(atoms_in_ball(m, b)); }
GridMeasure restrict_to(const GridMeasure& m, const DyadicCube& q) { return m.subset(atoms_in_cube(m, q)); }

SortedAtoms sort_atoms_by_distance(const GridMeasure& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.dim()) throw InvalidArgument("point has wrong dimension");
  const int n = m.dim();
  const std::size_t M = m.atom_count();
  std::vector<std::pair<double, std::uint32_t>> tmp(M);
  for (std::size_t a = 0; a < M; ++a) {
    auto y = m.atom(a);
    double d2 = 0.0;
    for (int d = 0; d < n; ++d) d2 += (y[d] - x[d]) * (y[d] - x[d]);
    tmp[a] = {std::sqrt(d2), static_cast<std::uint32_t>(a)};
  }
  std::sort(tmp.begin(), tmp.end());
  SortedAtoms out;
  out.index.resize(M);
  out.distance.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    out.distance[i] = tmp[i].first;
    out.index[i] = tmp[i].second;
  }
  return out;
}

RadialMassProfile radial_profile(const GridMeasure& m, std::span<const double> x) {
  SortedAtoms s = sort_atoms_by_distance(m, x);
  RadialMassProfile out;
  out.near_radius = m.near_radius();
  out.local_density = m.local_density(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.index.size(); ++i) {
    acc += m.atom_weight(s.index[i]);
    if (!out.radii.empty() && out.radii.back() == s.distance[i]) {
      out.cumulative.back() = acc;
    } else {
      out.radii.push_back(s.distance[i]);
      out.cumulative.push_back(acc);
    }
  }
  return out;
}

double RadialMassProfile::mass_within(double rho) const {
  auto it = std::upper_bound(radii.begin(), radii.end(), rho);
  if (it == radii.begin()) return 0.0;
  return cumulative[static_cast<std::size_t>(it - radii.begin()) - 1];
}

void write_measure_csv(const GridMeasure& m, std::ostream& out) {
  out << "dim,side,subsample\n";
  out << m.dim() << ',' << format_double(m.side()) << ',' << m.subsample() << '\n';
  const int n = m.dim();
  if (m.subsample() == 0) {
    for (std::size_t a = 0; a < m.atom_count(); ++a) {
      for (int d = 0; d < n; ++d) out << format_double(m.atom(a)[d]) << ',';
      out << format_double(m.atom_weight(a)) << '\n';
    }
    return;
  }
  for (std::size_t j = 0; j < m.cell_count(); ++j) {
    for (int d = 0; d < n; ++d) out << format_double(m.cell_center(j)[d]) << ',';
    out << format_double(m.cell_mass(j)) << '\n';
  }
}

namespace {
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
    std::size_t b = cur.find_first_not_of(' ');
    out.push_back(b == std::string::npos ? std::string() : cur.substr(b));
  }
  return out;
}
}  // namespace

GridMeasure read_measure_csv(std::istream& in) {
  std::string line;
  bool got = false;
  while ((got = static_cast<bool>(std::getline(in, line))) && !line.empty() && line[0] == '#') {
  }
  if (!got) throw InvalidArgument("measure file is empty");
  auto head = split_csv(line);
  if (!head.empty() && !head[0].empty() && std::isalpha(static_cast<unsigned char>(head[0][0]))) {
    if (!std::getline(in, line)) throw InvalidArgument("measure file lacks the dim,side,subsample line");
    head = split_csv(line);
  }
  if (head.size() != 3) throw InvalidArgument("expected dim,side,subsample");
  const double dimv = parse_double(head[0]);
  const double side = parse_double(head[1]);
  const double subv = parse_double(head[2]);
  if (dimv != std::floor(dimv) || dimv < 1 || subv != std::floor(subv) || subv < 0)
    throw InvalidArgument("dim and subsample must be integers");
  const int dim = static_cast<int>(dimv);
  const int sub = static_cast<int>(subv);
  std::vector<double> pts, masses;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv(line);
    if (f.size() != static_cast<std::size_t>(dim + 1))
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected " + std::to_string(dim + 1) + " fields");
    for (int d = 0; d < dim; ++d) pts.push_back(parse_double(f[d]));
    double w = parse_double(f[dim]);
    if (w < 0.0) throw InvalidArgument("line " + std::to_string(lineno) + ": negative mass");
    masses.push_back(w);
  }
  if (sub == 0) return GridMeasure::from_point_masses(dim, side, pts, masses);
  return GridMeasure::from_cells(dim, side, sub, pts, masses);
}

GridMeasure read_measure_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open measure file '" + path + "'");
  return read_measure_csv(f);
}

}  // namespace wolffkit
