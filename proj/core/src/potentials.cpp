#include "wolffkit/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wolffkit/parallel.hpp"

namespace wolffkit {

namespace {

void check_point(const GridMeasure& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.dim()) throw InvalidArgument("point has wrong dimension");
}

void check_kernel(const GridMeasure& m, const Params& prm) {
  prm.validate_kernel();
  if (prm.n != m.dim()) throw InvalidArgument("params dimension does not match the measure");
}

double near_coefficient(const Params& prm, double r0) {
  return (prm.p - 1.0) / (prm.alpha * prm.p) * std::pow(r0, prm.alpha * prm.p / (prm.p - 1.0));
}

double powe(double s, double e) { return e == 1.0 ? s : std::pow(s, e); }

}  // namespace

std::string to_string(Finiteness f) { return f == Finiteness::Finite ? "Finite" : "Infinite"; }

double wolff_from_radius(const RadialMassProfile& profile, const Params& prm, double r0) {
  const double g = prm.gamma();
  const double e = prm.wolff_exponent();
  const std::size_t L = profile.radii.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    double a = std::max(profile.radii[i], r0);
    double b = i + 1 < L ? std::max(profile.radii[i + 1], r0) : kInf;
    if (!(b > a)) continue;
    double da = std::pow(a, -g);
    double db = std::isinf(b) ? 0.0 : std::pow(b, -g);
    if (a == 0.0) return kInf;
    acc += powe(profile.cumulative[i], e) * (da - db) / g;
  }
  return acc;
}

double wolff(const GridMeasure& m, const Params& prm, std::span<const double> x, WolffOptions opt) {
  check_kernel(m, prm);
  check_point(m, x);
  if (m.empty()) return 0.0;
  if (!prm.subcritical()) throw NonIntegrableKernel("W_{alpha,p} sigma is infinite when alpha p >= n");
  RadialMassProfile prof = radial_profile(m, x);
  double r0 = opt.near_field ? prof.near_radius : 0.0;
  double near = 0.0;
  if (opt.near_field && prof.local_density > 0.0)
    near = powe(unit_ball_volume(prm.n) * prof.local_density, prm.wolff_exponent()) * near_coefficient(prm, r0);
  return near + wolff_from_radius(prof, prm, r0);
}

Field wolff_field(const GridMeasure& m, const Params& prm, std::span<const double> points, WolffOptions opt) {
  check_kernel(m, prm);
  if (points.size() % m.dim() != 0) throw InvalidArgument("points array is not a multiple of the dimension");
  Field f;
  f.dim = m.dim();
  f.points.assign(points.begin(), points.end());
  const std::size_t k = points.size() / m.dim();
  f.values.assign(k, 0.0);
  if (!m.empty() && !prm.subcritical()) {
    std::fill(f.values.begin(), f.values.end(), kInf);
    for (std::size_t i = 0; i < k; ++i) f.flagged.push_back(i);
    f.note = "NonIntegrableKernel: alpha p >= n";
    return f;
  }
  parallel_for(k, [&](std::size_t i) { f.values[i] = wolff(m, prm, f.point(i), opt); });
  for (std::size_t i = 0; i < k; ++i)
    if (!std::isfinite(f.values[i])) f.flagged.push_back(i);
  return f;
}

double riesz(const GridMeasure& m, double beta, std::span<const double> x) {
  check_point(m, x);
  if (!(beta > 0.0) || !(beta < m.dim())) throw InvalidArgument("Riesz order must satisfy 0 < beta < n");
  const int n = m.dim();
  const double a = 0.5 * (beta - n);
  double acc = 0.0;
  for (std::size_t i = 0; i < m.atom_count(); ++i) {
    auto y = m.atom(i);
    double d2 = 0.0;
    for (int d = 0; d < n; ++d) d2 += (y[d] - x[d]) * (y[d] - x[d]);
    if (d2 == 0.0) return kInf;
    acc += m.atom_weight(i) * std::pow(d2, a);
  }
  return acc;
}

Field riesz_field(const GridMeasure& m, double beta, std::span<const double> points) {
  if (points.size() % m.dim() != 0) throw InvalidArgument("points array is not a multiple of the dimension");
  Field f;
  f.dim = m.dim();
  f.points.assign(points.begin(), points.end());
  f.values.assign(points.size() / m.dim(), 0.0);
  parallel_for(f.values.size(), [&](std::size_t i) { f.values[i] = riesz(m, beta, f.point(i)); });
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!std::isfinite(f.values[i])) f.flagged.push_back(i);
  return f;
}

WolffPlan::WolffPlan(const GridMeasure& m, const Params& prm, std::span<const double> points, WolffOptions opt,
                     std::size_t max_cached_pairs)
    : m_(&m), prm_(prm), opt_(opt) {
  check_kernel(m, prm);
  if (!m.empty() && !prm.subcritical()) throw NonIntegrableKernel("W_{alpha,p} is infinite when alpha p >= n");
  if (points.size() % m.dim() != 0) throw InvalidArgument("points array is not a multiple of the dimension");
  npoints_ = points.size() / m.dim();
  points_.assign(points.begin(), points.end());
  const double r0 = opt.near_field ? m.near_radius() : 0.0;
  near_coef_ = opt.near_field ? near_coefficient(prm, r0) : 0.0;
  cell_of_point_.assign(npoints_, -1);
  for (std::size_t k = 0; k < npoints_; ++k) {
    auto j = m.locate(std::span<const double>(points_.data() + k * m.dim(), m.dim()));
    if (j) cell_of_point_[k] = static_cast<std::int64_t>(*j);
  }
  const std::size_t M = m.atom_count();
  cached_ = npoints_ * M <= max_cached_pairs;
  if (!cached_ || M == 0) return;
  order_.resize(npoints_ * M);
  coef_.resize(npoints_ * M);
  const double g = prm.gamma();
  parallel_for(npoints_, [&](std::size_t k) {
    SortedAtoms s = sort_atoms_by_distance(m, std::span<const double>(points_.data() + k * m.dim(), m.dim()));
    std::uint32_t* ord = order_.data() + k * M;
    double* c = coef_.data() + k * M;
    // c[i] = (A_i - A_{i+1}) / gamma with A_i = max(d_i, r0)^{-gamma}, A_M = 0.
    double next = 0.0;
    for (std::size_t i = M; i-- > 0;) {
      ord[i] = s.index[i];
      double a = std::max(s.distance[i], r0);
      bool tie = i + 1 < M && !(std::max(s.distance[i + 1], r0) > a);
      if (a == 0.0) {
        c[i] = kInf;
        next = kInf;
        continue;
      }
      double pa = g == 1.0 ? 1.0 / a : std::pow(a, -g);
      c[i] = tie ? 0.0 : (pa - next) / g;
      next = pa;
    }
  });
}

double WolffPlan::evaluate_point(std::size_t k, std::span<const double> atom_w,
                                 std::span<const double> cell_dens) const {
  const double e = prm_.wolff_exponent();
  double near = 0.0;
  if (opt_.near_field && cell_of_point_[k] >= 0) {
    double d = cell_dens[static_cast<std::size_t>(cell_of_point_[k])];
    if (d > 0.0) near = powe(unit_ball_volume(prm_.n) * d, e) * near_coef_;
  }
  const std::size_t M = m_->atom_count();
  if (M == 0) return near;
  double acc = 0.0, S = 0.0;
  if (cached_) {
    const std::uint32_t* ord = order_.data() + k * M;
    const double* c = coef_.data() + k * M;
    if (e == 1.0) {
      for (std::size_t i = 0; i < M; ++i) {
        S += atom_w[ord[i]];
        acc += S > 0.0 ? c[i] * S : 0.0;
      }
    } else {
      for (std::size_t i = 0; i < M; ++i) {
        S += atom_w[ord[i]];
        if (c[i] != 0.0 && S > 0.0) acc += c[i] * std::pow(S, e);
      }
    }
    return near + acc;
  }
  const int n = m_->dim();
  SortedAtoms s = sort_atoms_by_distance(*m_, std::span<const double>(points_.data() + k * n, n));
  const double r0 = opt_.near_field ? m_->near_radius() : 0.0;
  const double g = prm_.gamma();
  for (std::size_t i = 0; i < M; ++i) {
    S += atom_w[s.index[i]];
    double a = std::max(s.distance[i], r0);
    double b = i + 1 < M ? std::max(s.distance[i + 1], r0) : kInf;
    if (a == 0.0 && S > 0.0) return kInf;
    if (!(b > a) || !(S > 0.0)) continue;
    double c = (std::pow(a, -g) - (std::isinf(b) ? 0.0 : std::pow(b, -g))) / g;
    acc += c * powe(S, e);
  }
  return near + acc;
}

std::vector<double> WolffPlan::evaluate(std::span<const double> cell_factors) const {
  if (cell_factors.size() != m_->cell_count()) throw InvalidArgument("one factor per cell required");
  std::vector<double> atom_w(m_->atom_count()), cell_dens(m_->cell_count());
  for (std::size_t a = 0; a < atom_w.size(); ++a) atom_w[a] = m_->atom_weight(a) * cell_factors[m_->atom_cell(a)];
  const double vol = m_->cell_volume();
  for (std::size_t j = 0; j < cell_dens.size(); ++j) cell_dens[j] = m_->cell_mass(j) * cell_factors[j] / vol;
  std::vector<double> out(npoints_);
  parallel_for(npoints_, [&](std::size_t k) { out[k] = evaluate_point(k, atom_w, cell_dens); });
  return out;
}

FinitenessReport finiteness_test(const GridMeasure& m, const Params& prm) {
  check_kernel(m, prm);
  FinitenessReport rep;
  if (m.empty()) return rep;
  Point origin(m.dim(), 0.0);
  RadialMassProfile prof = radial_profile(m, origin);
  rep.tail_radius = prof.cover_radius();
  if (!prm.subcritical()) {
    rep.verdict = Finiteness::Infinite;
    rep.tail_value = kInf;
    rep.tail_from_one = kInf;
    return rep;
  }
  const double a = std::max(rep.tail_radius, 1e-300);
  rep.tail_value = powe(prof.total(), prm.wolff_exponent()) * std::pow(a, -prm.gamma()) / prm.gamma();
  rep.tail_from_one = wolff_from_radius(prof, prm, 1.0);
  return rep;
}

// Importance sampling for the energy and the Havin-Maz'ya potential.
namespace {

struct Bump {
  Point center;
  double scale = 1.0;
  double weight = 0.0;
  bool singular = false;  // density ~ alpha r^{alpha-1}/R^alpha on (0, R]
};

class Proposal {
 public:
  Proposal(const GridMeasure& m, double tail, double alpha) : n_(m.dim()), tail_(tail), alpha_(alpha) {
    const double h = m.side();
    Point sc = m.support_center();
    double rs = std::max(m.support_radius(), h);
    bumps_.push_back({sc, rs, 0.5, false});
    // Cells grouped into at most 64 clusters by a coarse grid over the support box.
    const int per_axis = std::max(1, static_cast<int>(std::floor(std::pow(64.0, 1.0 / n_) + 1e-9)));
    std::vector<double> lo(n_, kInf), hi(n_, -kInf);
    for (std::size_t j = 0; j < m.cell_count(); ++j)
      for (int d = 0; d < n_; ++d) {
        lo[d] = std::min(lo[d], m.cell_center(j)[d]);
        hi[d] = std::max(hi[d], m.cell_center(j)[d]);
      }
    std::size_t nclusters = 1;
    for (int d = 0; d < n_; ++d) nclusters *= per_axis;
    std::vector<double> mass(nclusters, 0.0), cen(nclusters * n_, 0.0);
    std::vector<std::size_t> label(m.cell_count());
    for (std::size_t j = 0; j < m.cell_count(); ++j) {
      std::size_t flat = 0;
      for (int d = 0; d < n_; ++d) {
        double t = hi[d] > lo[d] ? (m.cell_center(j)[d] - lo[d]) / (hi[d] - lo[d]) : 0.0;
        int b = std::min(per_axis - 1, static_cast<int>(t * per_axis));
        flat = flat * per_axis + b;
      }
      label[j] = flat;
      mass[flat] += m.cell_mass(j);
      for (int d = 0; d < n_; ++d) cen[flat * n_ + d] += m.cell_mass(j) * m.cell_center(j)[d];
    }
    std::vector<double> rad(nclusters, 0.0);
    for (std::size_t c = 0; c < nclusters; ++c)
      if (mass[c] > 0.0)
        for (int d = 0; d < n_; ++d) cen[c * n_ + d] /= mass[c];
    for (std::size_t j = 0; j < m.cell_count(); ++j) {
      std::size_t c = label[j];
      double s = 0.0;
      for (int d = 0; d < n_; ++d) s += std::pow(m.cell_center(j)[d] - cen[c * n_ + d], 2);
      rad[c] = std::max(rad[c], std::sqrt(s));
    }
    const double total = m.total_mass();
    for (std::size_t c = 0; c < nclusters; ++c) {
      if (mass[c] <= 0.0) continue;
      Point p(cen.begin() + c * n_, cen.begin() + (c + 1) * n_);
      bumps_.push_back({p, rad[c] + h, 0.5 * mass[c] / total, false});
    }
  }

  // Adds a singular bump at x carrying `weight` of the mixture.
  void add_singular(std::span<const double> x, double radius, double weight) {
    for (auto& b : bumps_) b.weight *= (1.0 - weight);
    bumps_.push_back({Point(x.begin(), x.end()), radius, weight, true});
  }
  void drop_singular() {
    if (!bumps_.empty() && bumps_.back().singular) {
      double w = bumps_.back().weight;
      bumps_.pop_back();
      for (auto& b : bumps_) b.weight /= (1.0 - w);
    }
  }
  void move_singular(std::span<const double> x) { std::copy(x.begin(), x.end(), bumps_.back().center.begin()); }

  template <class Rng>
  void sample(Rng& rng, std::vector<double>& y) const {
    double u = uniform(rng);
    std::size_t k = 0;
    for (; k + 1 < bumps_.size(); ++k) {
      if (u < bumps_[k].weight) break;
      u -= bumps_[k].weight;
    }
    const Bump& b = bumps_[k];
    double r;
    if (b.singular) {
      r = b.scale * std::pow(uniform_open(rng), 1.0 / alpha_);
    } else {
      r = b.scale * (std::pow(uniform_open(rng), -1.0 / tail_) - 1.0);
    }
    double norm2 = 0.0;
    for (int d = 0; d < n_; ++d) {
      y[d] = normal(rng);
      norm2 += y[d] * y[d];
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (int d = 0; d < n_; ++d) y[d] = b.center[d] + r * y[d] * inv;
  }

  double density(std::span<const double> y) const {
    const double area = unit_sphere_area(n_);
    double q = 0.0;
    for (const Bump& b : bumps_) {
      double r2 = 0.0;
      for (int d = 0; d < n_; ++d) r2 += (y[d] - b.center[d]) * (y[d] - b.center[d]);
      double r = std::sqrt(r2);
      if (r == 0.0) return kInf;
      double radial;
      if (b.singular) {
        if (r > b.scale) continue;
        radial = alpha_ * std::pow(r, alpha_ - 1.0) / std::pow(b.scale, alpha_);
      } else {
        radial = tail_ / b.scale * std::pow(1.0 + r / b.scale, -tail_ - 1.0);
      }
      q += b.weight * radial / (area * std::pow(r, n_ - 1));
    }
    return q;
  }

  template <class Rng>
  static double uniform(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  template <class Rng>
  static double uniform_open(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  }
  template <class Rng>
  static double normal(Rng& rng) {
    double u1 = uniform_open(rng), u2 = uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
  }

 private:
  int n_;
  double tail_;
  double alpha_;
  std::vector<Bump> bumps_;
};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::size_t kBlock = 256;

Estimate summarize(const std::vector<double>& v) {
  Estimate e;
  const double N = static_cast<double>(v.size());
  e.value = pairwise_sum(v) / N;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - e.value) * (v[i] - e.value);
  e.std_error = v.size() > 1 ? std::sqrt(pairwise_sum(dev) / (N - 1.0) / N) : 0.0;
  return e;
}

// Runs f(rng, i) for every sample with one engine per fixed-size block.
template <class F>
std::vector<double> sample_blocks(std::size_t samples, std::uint64_t seed, std::uint64_t stream, F&& f) {
  std::vector<double> v(samples);
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    std::mt19937_64 rng(splitmix(seed ^ splitmix(stream * 0x100000001b3ull + b)));
    for (std::size_t i = b * kBlock; i < std::min(samples, (b + 1) * kBlock); ++i) v[i] = f(rng);
  });
  return v;
}

void check_energy(const GridMeasure& m, const Params& prm) {
  check_kernel(m, prm);
  if (!(prm.alpha < prm.n)) throw InvalidArgument("alpha must be < n");
  const double nu = (prm.n - prm.alpha) * prm.p_prime() - prm.n;
  if (!(nu > 0.0)) throw Divergent("(n - alpha) p' <= n: the energy diverges at infinity");
}

}  // namespace

Estimate havin_mazya(const GridMeasure& m, const Params& prm, std::span<const double> x, const QuadratureSpec& quad) {
  check_point(m, x);
  check_energy(m, prm);
  if (m.empty()) return {};
  if (quad.samples < 2) throw InvalidArgument("at least two samples required");
  const int n = m.dim();
  const double nu = (n - prm.alpha) * prm.p_prime() - n;
  const double e = prm.p_prime() - 1.0;
  Proposal prop(m, nu, prm.alpha);
  prop.add_singular(x, std::max(m.support_radius(), 2.0 * m.side()), 0.3);
  auto v = sample_blocks(quad.samples, quad.seed, 11, [&](std::mt19937_64& rng) {
    std::vector<double> y(n);
    prop.sample(rng, y);
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) r2 += (y[d] - x[d]) * (y[d] - x[d]);
    double q = prop.density(y);
    if (!(q > 0.0) || !std::isfinite(q) || r2 == 0.0) return 0.0;
    double F = riesz_density(m, prm.alpha, y);
    return std::pow(r2, 0.5 * (prm.alpha - n)) * std::pow(F, e) / q;
  });
  return summarize(v);
}

EnergyReport energy(const GridMeasure& m, const Params& prm, const QuadratureSpec& quad) {
  check_energy(m, prm);
  EnergyReport rep;
  if (m.empty()) return rep;
  if (quad.samples < 2) throw InvalidArgument("at least two samples required");
  const int n = m.dim();
  const double nu = (n - prm.alpha) * prm.p_prime() - n;
  const double pp = prm.p_prime();
  Proposal prop(m, nu, prm.alpha);
  auto ev = sample_blocks(quad.samples, quad.seed, 21, [&](std::mt19937_64& rng) {
    std::vector<double> y(n);
    prop.sample(rng, y);
    double q = prop.density(y);
    if (!(q > 0.0) || !std::isfinite(q)) return 0.0;
    return std::pow(riesz_density(m, prm.alpha, y), pp) / q;
  });
  rep.energy = summarize(ev);

  // int V dsigma: x from the cell-density measure, then y given x.
  std::vector<double> cum(m.cell_count());
  double acc = 0.0;
  for (std::size_t j = 0; j < m.cell_count(); ++j) cum[j] = (acc += m.cell_mass(j));
  const double total = m.total_mass();
  const double radius = std::max(m.support_radius(), 2.0 * m.side());
  const double h = m.side();
  auto hv = sample_blocks(quad.samples, quad.seed, 31, [&](std::mt19937_64& rng) {
    std::vector<double> x(n), y(n);
    double u = Proposal::uniform(rng) * total;
    std::size_t j = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    j = std::min(j, m.cell_count() - 1);
    for (int d = 0; d < n; ++d) x[d] = m.cell_center(j)[d] + (Proposal::uniform(rng) - 0.5) * h;
    Proposal local = prop;
    local.add_singular(x, radius, 0.3);
    local.sample(rng, y);
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) r2 += (y[d] - x[d]) * (y[d] - x[d]);
    double q = local.density(y);
    if (!(q > 0.0) || !std::isfinite(q) || r2 == 0.0) return 0.0;
    double F = riesz_density(m, prm.alpha, y);
    return total * std::pow(r2, 0.5 * (prm.alpha - n)) * std::pow(F, pp - 1.0) / q;
  });
  rep.hm_integral = summarize(hv);
  rep.fubini_gap = std::abs(rep.energy.value - rep.hm_integral.value);
  rep.fubini_tolerance = 3.0 * std::hypot(rep.energy.std_error, rep.hm_integral.std_error);
  return rep;
}

}  // namespace wolffkit
