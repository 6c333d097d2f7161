#include "wolffkit/kappa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "wolffkit/dyadic.hpp"
#include "wolffkit/format.hpp"
#include "wolffkit/parallel.hpp"

namespace wolffkit {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::TrivialOnly: return "TrivialOnly";
    case SolveStatus::NonFinite: return "NonFinite";
    case SolveStatus::MaxIters: return "MaxIters";
  }
  return "?";
}

std::string ball_region_id(std::span<const double> center, double radius) {
  std::string s;
  for (std::size_t d = 0; d < center.size(); ++d) {
    if (d) s += ',';
    s += format_double(center[d]);
  }
  return s + ";" + format_double(radius);
}

const BallSeries* KappaTable::find_series(std::span<const double> x) const {
  for (const BallSeries& b : balls)
    if (std::equal(b.center.begin(), b.center.end(), x.begin(), x.end())) return &b;
  return nullptr;
}

double KappaTable::cube_kappa(const DyadicCube& q) const {
  auto it = cubes.find(q);
  if (it != cubes.end()) return it->second;
  if (implicit_zero) return 0.0;
  throw IncompleteTable("no kappa entry for cube " + q.id());
}

double kappa_from_solution(const GridMeasure& restricted, const Params& prm, const SolveReport& rep) {
  if (restricted.empty()) return 0.0;
  if (!prm.subcritical()) return kInf;
  if (rep.u.values.size() != restricted.cell_count()) throw InvalidArgument("solution does not match the measure");
  std::vector<double> t(rep.u.values.size());
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = restricted.cell_mass(j) * std::pow(rep.u.values[j], prm.q);
  double integral = pairwise_sum(t);
  return std::pow(integral, (prm.p - 1.0 - prm.q) / (prm.q * (prm.p - 1.0)));
}

namespace {

double kappa_of_restriction(const GridMeasure& sub, const Params& prm, const SolverOptions& opt) {
  if (sub.empty()) return 0.0;
  if (!prm.subcritical()) return kInf;
  SolveReport rep = solve_minimal(sub, prm, opt);
  if (rep.status != SolveStatus::Converged)
    throw NumericFailure("localized solve did not converge: " + to_string(rep.status));
  return kappa_from_solution(sub, prm, rep);
}

}  // namespace

double kappa_est(const GridMeasure& m, const Params& prm, const Ball& e, const SolverOptions& opt) {
  prm.validate();
  return kappa_of_restriction(restrict_to(m, e), prm, opt);
}

double kappa_est(const GridMeasure& m, const Params& prm, const DyadicCube& e, const SolverOptions& opt) {
  prm.validate();
  return kappa_of_restriction(restrict_to(m, e), prm, opt);
}

double kappa_lower_dirac(const GridMeasure& restricted, const Params& prm, std::span<const double> probes) {
  prm.validate();
  const int n = restricted.dim();
  if (probes.size() % n != 0) throw InvalidArgument("probe array is not a multiple of the dimension");
  if (restricted.empty()) return 0.0;
  if (!prm.subcritical()) return kInf;
  const double g = prm.gamma();
  double best = 0.0;
  std::vector<double> t(restricted.atom_count());
  for (std::size_t k = 0; k < probes.size() / n; ++k) {
    auto y = probes.subspan(k * n, n);
    for (std::size_t a = 0; a < restricted.atom_count(); ++a) {
      auto x = restricted.atom(a);
      double d2 = 0.0;
      for (int d = 0; d < n; ++d) d2 += (x[d] - y[d]) * (x[d] - y[d]);
      t[a] = restricted.atom_weight(a) * std::pow(std::pow(d2, -0.5 * g) / g, prm.q);
    }
    best = std::max(best, std::pow(pairwise_sum(t), 1.0 / prm.q));
  }
  return best;
}

double kappa_lower_dirac(const GridMeasure& m, const Params& prm, const Ball& e, std::span<const double> probes) {
  return kappa_lower_dirac(restrict_to(m, e), prm, probes);
}

std::vector<double> radius_grid(const GridMeasure& m, std::span<const double> x, const RadiusGridSpec& spec) {
  if (spec.per_decade < 1 || spec.window < 0) throw InvalidArgument("bad radius grid spec");
  SortedAtoms s = sort_atoms_by_distance(m, x);
  std::vector<double> r;
  if (s.distance.empty()) return r;
  const double dmin = s.distance.front(), dcover = s.distance.back();
  const double rmin = spec.min_radius > 0.0 ? spec.min_radius : m.side();
  for (int k = 0;; ++k) {
    double rho = rmin * std::pow(10.0, static_cast<double>(k) / spec.per_decade);
    if (!(rho < dcover)) break;
    r.push_back(rho);
  }
  for (int i = 0; i < spec.window; ++i) r.push_back(dmin + (dcover - dmin) * i / spec.window);
  r.push_back(dcover);
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  r.erase(std::remove_if(r.begin(), r.end(), [](double v) { return !(v > 0.0); }), r.end());
  return r;
}

namespace {

// Solves each distinct atom set once. Sets are identified by a hash with a
// full comparison on collision.
class KappaMemo {
 public:
  KappaMemo(const GridMeasure& m, const Params& prm, const KappaOptions& opt) : m_(m), prm_(prm), opt_(opt) {}

  std::size_t add(std::vector<std::uint32_t> atoms) {
    std::uint64_t h = 1469598103934665603ull ^ atoms.size();
    for (auto a : atoms) {
      h ^= a + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    auto& bucket = by_hash_[h];
    for (std::size_t id : bucket)
      if (sets_[id] == atoms) return id;
    sets_.push_back(std::move(atoms));
    bucket.push_back(sets_.size() - 1);
    return sets_.size() - 1;
  }

  void solve_all() {
    results_.assign(sets_.size(), KappaEntry{});
    errors_.assign(sets_.size(), std::string());
    parallel_for(sets_.size(), [&](std::size_t i) {
      KappaEntry& e = results_[i];
      if (sets_[i].empty()) return;
      GridMeasure sub = m_.subset(sets_[i]);
      if (!prm_.subcritical()) {
        e.kappa_est = kInf;
        e.kappa_lb = kInf;
        return;
      }
      try {
        SolveReport rep = solve_minimal(sub, prm_, opt_.solver);
        e.status = rep.status;
        e.iterations = rep.iterations;
        e.residual = rep.residual;
        if (rep.status != SolveStatus::Converged) errors_[i] = "solve " + to_string(rep.status);
        e.kappa_est = kappa_from_solution(sub, prm_, rep);
      } catch (const Error& ex) {
        e.status = SolveStatus::NonFinite;
        e.kappa_est = std::numeric_limits<double>::quiet_NaN();
        errors_[i] = ex.what();
      }
      if (opt_.lower_bounds) {
        const std::size_t nc = sub.cell_count();
        const std::size_t k = std::min<std::size_t>(nc, std::max(1, opt_.lb_probes));
        std::vector<double> probes;
        for (std::size_t t = 0; t < k; ++t) {
          auto c = sub.cell_center(t * nc / k);
          probes.insert(probes.end(), c.begin(), c.end());
        }
        e.kappa_lb = kappa_lower_dirac(sub, prm_, probes);
      }
    });
  }

  const KappaEntry& result(std::size_t id) const { return results_[id]; }
  const std::string& error(std::size_t id) const { return errors_[id]; }
  std::size_t size() const { return sets_.size(); }

 private:
  const GridMeasure& m_;
  Params prm_;
  KappaOptions opt_;
  std::vector<std::vector<std::uint32_t>> sets_;
  std::map<std::uint64_t, std::vector<std::size_t>> by_hash_;
  std::vector<KappaEntry> results_;
  std::vector<std::string> errors_;
};

std::vector<std::uint32_t> all_atoms(const GridMeasure& m) {
  std::vector<std::uint32_t> v(m.atom_count());
  for (std::size_t a = 0; a < v.size(); ++a) v[a] = static_cast<std::uint32_t>(a);
  return v;
}

}  // namespace

KappaTable build_ball_kappa_table(const GridMeasure& m, const Params& prm, std::span<const double> centers,
                                  const KappaOptions& opt) {
  prm.validate();
  if (prm.n != m.dim()) throw InvalidArgument("params dimension does not match the measure");
  const int n = m.dim();
  if (centers.size() % n != 0) throw InvalidArgument("centers array is not a multiple of the dimension");
  KappaTable kt;
  kt.params = prm;
  const std::size_t nc = centers.size() / n;
  KappaMemo memo(m, prm, opt);
  const std::size_t global_id = memo.add(all_atoms(m));

  struct Pending {
    std::vector<double> radii;
    std::vector<std::size_t> set;
    std::vector<double> mass;
  };
  std::vector<Pending> pend(nc);
  std::vector<SortedAtoms> sorted(nc);
  std::vector<std::vector<std::vector<std::uint32_t>>> sets(nc);
  parallel_for(nc, [&](std::size_t c) {
    auto x = centers.subspan(c * n, n);
    sorted[c] = sort_atoms_by_distance(m, x);
    pend[c].radii = radius_grid(m, x, opt.grid);
    const auto& s = sorted[c];
    double acc = 0.0;
    std::size_t taken = 0;
    for (double rho : pend[c].radii) {
      std::size_t cnt = static_cast<std::size_t>(std::upper_bound(s.distance.begin(), s.distance.end(), rho) -
                                                 s.distance.begin());
      for (; taken < cnt; ++taken) acc += m.atom_weight(s.index[taken]);
      pend[c].mass.push_back(acc);
      std::vector<std::uint32_t> set(s.index.begin(), s.index.begin() + static_cast<std::ptrdiff_t>(cnt));
      std::sort(set.begin(), set.end());
      sets[c].push_back(std::move(set));
    }
  });
  for (std::size_t c = 0; c < nc; ++c)
    for (auto& s : sets[c]) pend[c].set.push_back(memo.add(std::move(s)));
  sets.clear();
  memo.solve_all();

  kt.global_kappa = memo.result(global_id).kappa_est;
  for (std::size_t c = 0; c < nc; ++c) {
    BallSeries b;
    b.center.assign(centers.begin() + c * n, centers.begin() + (c + 1) * n);
    b.radii = pend[c].radii;
    b.mass = pend[c].mass;
    double env = 0.0;
    for (std::size_t i = 0; i < b.radii.size(); ++i) {
      const KappaEntry& e = memo.result(pend[c].set[i]);
      b.kappa_raw.push_back(e.kappa_est);
      env = std::max(env, e.kappa_est);
      b.kappa.push_back(env);
      b.kappa_lb.push_back(e.kappa_lb);
      std::string id = ball_region_id(b.center, b.radii[i]);
      KappaEntry stored = e;
      stored.kappa_est = env;
      kt.entries[id] = stored;
      if (!memo.error(pend[c].set[i]).empty()) kt.failures.push_back(id + ": " + memo.error(pend[c].set[i]));
    }
    kt.balls.push_back(std::move(b));
  }
  return kt;
}

int cell_level(const GridMeasure& m) {
  return static_cast<int>(std::lround(-std::log2(m.side())));
}

KappaTable build_cube_kappa_table(const GridMeasure& m, const Params& prm, int j_max, const KappaOptions& opt) {
  prm.validate();
  if (prm.n != m.dim()) throw InvalidArgument("params dimension does not match the measure");
  if (j_max > kMaxDyadicLevel || j_max < kMinDyadicLevel) throw InvalidArgument("j_max out of range");
  KappaTable kt;
  kt.params = prm;
  kt.has_cubes = true;
  kt.implicit_zero = true;
  kt.coarse_stable = true;
  kt.j_max = j_max;
  kt.j_min = m.empty() ? j_max : std::min(j_max, stabilization_level(m, j_max));
  KappaMemo memo(m, prm, opt);
  const std::size_t global_id = memo.add(all_atoms(m));
  std::vector<std::pair<DyadicCube, std::size_t>> cubes;
  for (int j = kt.j_min; j <= kt.j_max; ++j) {
    std::map<DyadicCube, std::vector<std::uint32_t>> groups;
    for (std::size_t a = 0; a < m.atom_count(); ++a) groups[cube_of(m.atom(a), j)].push_back(static_cast<std::uint32_t>(a));
    for (auto& [q, atoms] : groups) cubes.emplace_back(q, memo.add(std::move(atoms)));
  }
  memo.solve_all();
  kt.global_kappa = memo.result(global_id).kappa_est;
  for (const auto& [q, id] : cubes) {
    const KappaEntry& e = memo.result(id);
    kt.cubes[q] = e.kappa_est;
    kt.entries[q.id()] = e;
    if (!memo.error(id).empty()) kt.failures.push_back(q.id() + ": " + memo.error(id));
  }
  return kt;
}

namespace {

const BallSeries& series_at(const KappaTable& kt, std::span<const double> x) {
  const BallSeries* s = kt.find_series(x);
  if (!s) throw IncompleteTable("no radius series for this point");
  return *s;
}

}  // namespace

double intrinsic_potential(const KappaTable& kt, const Params& prm, std::span<const double> x) {
  if (kt.global_kappa == 0.0) return 0.0;
  if (!prm.subcritical()) return kInf;
  const BallSeries& s = series_at(kt, x);
  const double g = prm.gamma();
  const double e = prm.kappa_root_exponent();
  const std::size_t L = s.radii.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    if (s.kappa[i] <= 0.0) continue;
    double a = std::pow(s.radii[i], -g);
    double b = i + 1 < L ? std::pow(s.radii[i + 1], -g) : 0.0;
    acc += std::pow(s.kappa[i], e) * (a - b) / g;
  }
  return acc;
}

double sup_functional(const KappaTable& kt, const Params& prm, std::span<const double> x) {
  if (kt.global_kappa == 0.0) return 0.0;
  if (!prm.subcritical()) return kInf;
  const BallSeries& s = series_at(kt, x);
  const double g = prm.gamma();
  const double e = prm.kappa_root_exponent();
  double best = 0.0;
  for (std::size_t i = 0; i < s.radii.size(); ++i)
    if (s.kappa[i] > 0.0) best = std::max(best, std::pow(s.kappa[i], e) * std::pow(s.radii[i], -g));
  return best;
}

double sup_bound_constant(const Params& prm) { return std::exp2(prm.gamma()) / std::numbers::ln2; }

TrivReport triv_check(const KappaTable& kt, const Params& prm) {
  TrivReport rep;
  const double g = prm.gamma();
  const double vn = unit_ball_volume(prm.n);
  const double expo = 1.0 / (prm.p - 1.0 - prm.q);
  auto vol_factor = [&](double rho) { return std::pow(vn * std::pow(rho, prm.n), -prm.q * g / prm.n); };
  for (const BallSeries& s : kt.balls)
    for (std::size_t i = 0; i < s.radii.size(); ++i)
      if (s.mass[i] > 0.0 && s.kappa[i] > 0.0)
        rep.constant = std::max(rep.constant, s.mass[i] * vol_factor(s.radii[i]) / std::pow(s.kappa[i], prm.q));
  for (const BallSeries& s : kt.balls)
    for (std::size_t i = 0; i < s.radii.size(); ++i) {
      if (!(s.mass[i] > 0.0) || !(s.kappa[i] > 0.0)) continue;
      double rho = s.radii[i];
      double lower = std::pow(s.mass[i] / std::pow(rho, prm.n - prm.alpha * prm.p), expo);
      // sigma(B) <= C kappa^q |B|^{q gamma/n} turns into a multiple of the K integrand.
      double upper = std::pow(rep.constant * std::pow(vn, prm.q * g / prm.n), expo) *
                     std::pow(s.kappa[i], prm.kappa_root_exponent()) * std::pow(rho, -g);
      rep.worst_ratio = std::max(rep.worst_ratio, lower / upper);
    }
  return rep;
}

}  // namespace wolffkit
