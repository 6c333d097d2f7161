#include "wolffkit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wolffkit/kappa.hpp"

namespace wolffkit {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kSlack = 8.0 * kEps;

Field field_at_cells(const GridMeasure& m, std::vector<double> values) {
  Field f;
  f.dim = m.dim();
  f.points.assign(m.cell_centers().begin(), m.cell_centers().end());
  f.values = std::move(values);
  return f;
}

void check_solver_params(const GridMeasure& m, const Params& prm, const SolverOptions& opt) {
  prm.validate();
  if (prm.n != m.dim()) throw InvalidArgument("params dimension does not match the measure");
  if (!(opt.tol > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (opt.max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
}

bool all_finite(const std::vector<double>& v, double limit) {
  for (double x : v)
    if (!std::isfinite(x) || x > limit) return false;
  return true;
}

// Iterates u <- T(u) from `u` with T(u) = `next` already known. direction +1
// means the sequence must be nondecreasing, -1 nonincreasing.
SolveReport iterate(const SublinearOperator& op, std::vector<double> u, std::vector<double> next, int direction,
                    int used, const SolverOptions& opt) {
  SolveReport rep;
  rep.iterations = used;
  const std::size_t N = u.size();
  for (;;) {
    if (!all_finite(next, opt.overflow)) {
      rep.status = SolveStatus::NonFinite;
      rep.message = "iterate exceeded the overflow guard";
      rep.u = field_at_cells(op.measure(), std::move(u));
      return rep;
    }
    double res = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      if (direction > 0 ? next[j] < u[j] * (1.0 - kSlack) : next[j] > u[j] * (1.0 + kSlack))
        throw NumericFailure("monotone iteration lost monotonicity at cell " + std::to_string(j));
      res = std::max(res, std::abs(next[j] - u[j]) / u[j]);
    }
    rep.residual_history.push_back(res);
    rep.residual = res;
    u.swap(next);
    if (res <= opt.tol) {
      rep.status = SolveStatus::Converged;
      break;
    }
    if (rep.iterations >= opt.max_iters) {
      rep.status = SolveStatus::MaxIters;
      rep.message = "iteration budget exhausted";
      break;
    }
    next = op.apply(u);
    ++rep.iterations;
  }
  std::vector<double> tu = op.apply(u);
  rep.bracket_min = kInf;
  rep.bracket_max = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    double r = tu[j] / u[j];
    rep.bracket_min = std::min(rep.bracket_min, r);
    rep.bracket_max = std::max(rep.bracket_max, r);
  }
  rep.u = field_at_cells(op.measure(), std::move(u));
  return rep;
}

}  // namespace

SublinearOperator::SublinearOperator(const GridMeasure& m, const Params& prm, std::size_t max_cached_pairs)
    : m_(&m), prm_(prm) {
  if (prm.n != m.dim()) throw InvalidArgument("params dimension does not match the measure");
  plan_ = std::make_unique<WolffPlan>(m, prm, m.cell_centers(), WolffOptions{}, max_cached_pairs);
}

std::vector<double> SublinearOperator::apply(std::span<const double> u) const {
  if (u.size() != m_->cell_count()) throw InvalidArgument("u must have one value per cell");
  std::vector<double> f(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (!(u[j] >= 0.0)) throw InvalidArgument("u must be nonnegative");
    f[j] = std::pow(u[j], prm_.q);
  }
  return plan_->evaluate(f);
}

std::vector<double> SublinearOperator::wolff_of_sigma() const {
  std::vector<double> ones(m_->cell_count(), 1.0);
  return plan_->evaluate(ones);
}

Field apply_T(const GridMeasure& m, const Params& prm, const Field& u) {
  prm.validate();
  if (u.values.size() != m.cell_count()) throw InvalidArgument("u must have one value per cell");
  SublinearOperator op(m, prm);
  return field_at_cells(m, op.apply(u.values));
}

SolveReport solve_minimal(const GridMeasure& m, const Params& prm, const SolverOptions& opt) {
  check_solver_params(m, prm, opt);
  SolveReport rep;
  if (m.empty()) {
    rep.status = SolveStatus::TrivialOnly;
    rep.message = "sigma = 0";
    rep.u = field_at_cells(m, {});
    return rep;
  }
  if (!prm.subcritical()) {
    rep.status = SolveStatus::TrivialOnly;
    rep.message = "alpha p >= n: only the trivial solution exists";
    rep.u = field_at_cells(m, std::vector<double>(m.cell_count(), 0.0));
    return rep;
  }
  SublinearOperator op(m, prm, opt.max_cached_pairs);
  const double es = prm.solution_exponent();
  std::vector<double> w = op.wolff_of_sigma();
  std::vector<double> u0(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) u0[j] = std::pow(w[j], es);
  std::vector<double> t0 = op.apply(u0);
  double lambda = kInf;
  for (std::size_t j = 0; j < w.size(); ++j) lambda = std::min(lambda, t0[j] / u0[j]);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw NumericFailure("degenerate subsolution");
  // T(c u0) = c^{q/(p-1)} T(u0) >= c u0 iff c <= lambda^{(p-1)/(p-1-q)}.
  const double c = std::pow(lambda, es) * (1.0 - 1e-12);
  const double ct = std::pow(c, prm.q / (prm.p - 1.0));
  for (std::size_t j = 0; j < w.size(); ++j) {
    u0[j] *= c;
    t0[j] *= ct;
  }
  return iterate(op, std::move(u0), std::move(t0), +1, 2, opt);
}

SolveReport solve_from_above(const GridMeasure& m, const Params& prm, std::span<const double> start,
                             const SolverOptions& opt) {
  check_solver_params(m, prm, opt);
  if (start.size() != m.cell_count()) throw InvalidArgument("start must have one value per cell");
  if (m.empty() || !prm.subcritical()) return solve_minimal(m, prm, opt);
  SublinearOperator op(m, prm, opt.max_cached_pairs);
  std::vector<double> u(start.begin(), start.end());
  for (double v : u)
    if (!(v > 0.0)) throw InvalidArgument("supersolution must be positive");
  std::vector<double> next = op.apply(u);
  for (std::size_t j = 0; j < u.size(); ++j)
    if (next[j] > u[j] * (1.0 + kSlack)) throw InvalidArgument("start is not a supersolution");
  return iterate(op, std::move(u), std::move(next), -1, 1, opt);
}

Field extend_solution(const GridMeasure& m, const Params& prm, const SolveReport& rep, std::span<const double> points) {
  Field f;
  f.dim = m.dim();
  f.points.assign(points.begin(), points.end());
  if (m.empty() || rep.u.values.empty()) {
    f.values.assign(points.size() / m.dim(), 0.0);
    return f;
  }
  if (rep.u.values.size() != m.cell_count()) throw InvalidArgument("solution does not belong to this measure");
  WolffPlan plan(m, prm, points);
  std::vector<double> fac(m.cell_count());
  for (std::size_t j = 0; j < fac.size(); ++j) fac[j] = std::pow(rep.u.values[j], prm.q);
  f.values = plan.evaluate(fac);
  return f;
}

TwoSidedReport verify_two_sided(const SolveReport& rep, const GridMeasure& m, const Params& prm, const KappaTable& kt,
                                std::span<const double> probes) {
  prm.validate();
  if (rep.status != SolveStatus::Converged) throw NumericFailure("two-sided check needs a converged solution");
  Field u = extend_solution(m, prm, rep, probes);
  Field w = wolff_field(m, prm, probes);
  TwoSidedReport out;
  out.min = kInf;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double k = intrinsic_potential(kt, prm, u.point(i));
    double denom = std::pow(w.values[i], prm.solution_exponent()) + k;
    double r = u.values[i] / denom;
    out.ratios.push_back(r);
    out.min = std::min(out.min, r);
    out.max = std::max(out.max, r);
  }
  out.spread = out.ratios.empty() ? 0.0 : out.max / out.min;
  return out;
}

}  // namespace wolffkit
