// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "runner.hpp"
#include "wolffkit/criteria.hpp"
#include "wolffkit/dyadic.hpp"
#include "wolffkit/kappa.hpp"
#include "wolffkit/parallel.hpp"
#include "wolffkit/solver.hpp"

using namespace wolffkit;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      if (pass) detail << "failed: ";
      detail << what << "; ";
      pass = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) { return a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

const Params kStandard{3, 1.0, 2.0, 0.5, 0.0};

GridMeasure standard_ball(int cells, int subsample) {
  MeasureSpec s;
  s.kind = MeasureSpec::Kind::UniformBall;
  s.dim = 3;
  s.cells = cells;
  s.subsample = subsample;
  return build_grid_measure(s);
}

// Family for criteria 5 and 6: sparse random block densities on [-1, 1]^2.
const Params kFamily{2, 0.5, 2.0, 0.5, 3.0};

GridMeasure family_member(std::uint64_t seed, int cells) {
  MeasureSpec s;
  s.kind = MeasureSpec::Kind::RandomCells;
  s.dim = 2;
  s.radius = 1.0;
  s.cells = cells;
  s.subsample = 2;
  s.blocks = 4;
  s.sparsity = 0.4;
  s.seed = seed;
  return build_grid_measure(s);
}

KappaOptions table_options() {
  KappaOptions o;
  o.lower_bounds = false;
  return o;
}

std::vector<double> sup_bound_violations;  // filled by every table built below

void record_sup_bound(const KappaTable& kt, const Params& prm, std::span<const double> pts) {
  const double c = sup_bound_constant(prm);
  for (std::size_t i = 0; i < pts.size() / prm.n; ++i) {
    auto x = pts.subspan(i * prm.n, prm.n);
    double K = intrinsic_potential(kt, prm, x), S = sup_functional(kt, prm, x);
    sup_bound_violations.push_back(K > 0.0 ? S / (c * K) : (S > 0.0 ? kInf : 0.0));
  }
}

void c1(Outcome& o) {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst_w = 0.0, worst_r = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + k % 3;
    Params prm;
    prm.n = n;
    prm.p = 1.2 + 1.8 * U(rng);
    prm.alpha = (0.05 + 0.9 * U(rng)) * n / prm.p;
    prm.q = 0.5 * (prm.p - 1.0);
    std::vector<double> a(n), x(n);
    for (int d = 0; d < n; ++d) a[d] = 4.0 * U(rng) - 2.0, x[d] = 4.0 * U(rng) - 2.0;
    const double mass = 0.1 + 3.0 * U(rng);
    GridMeasure m = GridMeasure::from_point_masses(n, 0.125, a, std::vector<double>{mass});
    double d2 = 0.0;
    for (int d = 0; d < n; ++d) d2 += (x[d] - a[d]) * (x[d] - a[d]);
    const double r = std::sqrt(d2);
    const double g = prm.gamma();
    double w = wolff(m, prm, x, WolffOptions{false});
    double want = std::pow(m.total_mass(), 1.0 / (prm.p - 1.0)) * std::pow(r, -g) / g;
    worst_w = std::max(worst_w, rel(w, want));
    const double beta = (0.05 + 0.9 * U(rng)) * n;
    double iv = riesz(m, beta, x);
    worst_r = std::max(worst_r, rel(iv, m.total_mass() * std::pow(r, -(n - beta))));
  }
  const double t = seconds_since(t0);
  o.detail << "max rel err Wolff " << worst_w << ", Riesz " << worst_r << ", " << t << " s; ";
  o.require(worst_w <= 1e-10, "Wolff closed form");
  o.require(worst_r <= 1e-10, "Riesz closed form");
  o.require(t < 1.0, "runtime");
}

void c2(Outcome& o) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int n = 1 + k % 3;
    Params prm;
    prm.n = n;
    prm.p = 2.0;
    prm.alpha = (0.1 + 0.8 * U(rng)) * n / 2.0;
    prm.q = 0.5;
    const int atoms = 5 + static_cast<int>(U(rng) * 40);
    std::vector<double> pts, w;
    for (int a = 0; a < atoms; ++a) {
      for (int d = 0; d < n; ++d) pts.push_back(2.0 * U(rng) - 1.0);
      w.push_back(U(rng));
    }
    GridMeasure m = GridMeasure::from_point_masses(n, 0.25, pts, w);
    for (int j = 0; j < 10; ++j) {
      std::vector<double> x(n);
      for (int d = 0; d < n; ++d) x[d] = 3.0 * U(rng) - 1.5;
      double W = wolff(m, prm, x, WolffOptions{false});
      double I = riesz(m, 2.0 * prm.alpha, x) / (n - 2.0 * prm.alpha);
      worst = std::max(worst, rel(W, I));
    }
  }
  o.detail << "max rel err " << worst << " over 200 points; ";
  o.require(worst <= 1e-10, "W = I_{2 alpha}/(n - 2 alpha)");
}

void c3(Outcome& o) {
  const Params& prm = kStandard;
  GridMeasure m = standard_ball(6, 2);
  const Ball ball{{0.2, 0.0, -0.1}, 0.7};
  std::vector<double> probes = {0.0, 0.0, 0.0, 0.5, 0.3, 0.1, 1.5, 0.0, 0.0};
  SolveReport base = solve_minimal(m, prm);
  o.require(base.status == SolveStatus::Converged, "base solve converged");
  Field u{3, std::vector<double>(m.cell_centers().begin(), m.cell_centers().end()),
          std::vector<double>(m.cell_count(), 0.0), {}, {}};
  for (std::size_t j = 0; j < m.cell_count(); ++j) u.values[j] = 1.0 + 0.1 * static_cast<double>(j % 7);
  Field W0 = wolff_field(m, prm, probes);
  Field T0 = apply_T(m, prm, u);
  double k0 = kappa_est(m, prm, ball);
  KappaTable kt0 = build_ball_kappa_table(m, prm, probes, table_options());
  double c30 = bmo_criteria(m, prm, kt0).constant("C3");
  double worst = 0.0;
  for (double t : {2.0, 5.0}) {
    GridMeasure mt = m.scaled(t);
    Field W = wolff_field(mt, prm, probes);
    Field T = apply_T(mt, prm, u);
    SolveReport s = solve_minimal(mt, prm);
    double k = kappa_est(mt, prm, ball);
    KappaTable kt = build_ball_kappa_table(mt, prm, probes, table_options());
    double c3 = bmo_criteria(mt, prm, kt).constant("C3");
    for (std::size_t i = 0; i < W.size(); ++i)
      worst = std::max(worst, rel(W.values[i], std::pow(t, 1.0 / (prm.p - 1.0)) * W0.values[i]));
    for (std::size_t i = 0; i < T.size(); ++i)
      worst = std::max(worst, rel(T.values[i], std::pow(t, 1.0 / (prm.p - 1.0)) * T0.values[i]));
    const double su = std::pow(t, 1.0 / (prm.p - 1.0 - prm.q));
    for (std::size_t i = 0; i < s.u.size(); ++i) worst = std::max(worst, rel(s.u.values[i], su * base.u.values[i]));
    worst = std::max(worst, rel(k, std::pow(t, 1.0 / prm.q) * k0));
    worst = std::max(worst, rel(c3, std::pow(t, prm.solution_exponent()) * c30));
  }
  // T(u) has exponent 1/(p-1) in sigma; the q/(p-1) law is in u.
  const double tu = 3.0;
  Field u3 = u;
  for (double& v : u3.values) v *= tu;
  Field T3 = apply_T(m, prm, u3);
  for (std::size_t i = 0; i < T3.size(); ++i)
    worst = std::max(worst, rel(T3.values[i], std::pow(tu, prm.q / (prm.p - 1.0)) * T0.values[i]));
  o.detail << "max rel deviation " << worst << " (t = 2, 5); ";
  o.require(worst <= 1e-8, "homogeneity exponents");
}

void c4(Outcome& o) {
  GridMeasure m = standard_ball(16, 8);
  auto t0 = std::chrono::steady_clock::now();
  SolveReport r;
  try {
    r = solve_minimal(m, kStandard);
  } catch (const NumericFailure& e) {
    o.require(false, e.what());
    return;
  }
  const double t = seconds_since(t0);
  o.detail << r.iterations << " iterations, residual " << r.residual << ", " << t << " s; ";
  o.require(r.status == SolveStatus::Converged, "converged");
  o.require(r.residual <= 1e-8, "residual");
  o.require(r.iterations < 500, "iterations");
  o.require(t < 60.0, "runtime");
  std::vector<double> start(r.u.values);
  for (double& v : start) v *= 2.0;
  SolveReport d = solve_from_above(m, kStandard, start);
  double diff = 0.0;
  for (std::size_t i = 0; i < d.u.size(); ++i) diff = std::max(diff, rel(d.u.values[i], r.u.values[i]));
  o.detail << "from 2u: " << d.iterations << " iterations, max rel diff " << diff << "; ";
  o.require(d.status == SolveStatus::Converged, "downward converged");
  o.require(diff <= 5e-8, "same fixed point from above");
}

void c5_c6(Outcome& o5, Outcome& o6) {
  const Params& prm = kFamily;
  SpatialGrid g = ball_grid(Point{0.0, 0.0}, 1.5, 6);
  double band[2] = {0.0, 0.0};
  double ew_worst_drift = 0.0, ew_max[2] = {0.0, 0.0};
  int fails_direction = 0, instances = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    double ew[2] = {0.0, 0.0};
    for (int level = 0; level < 2; ++level) {
      GridMeasure m = family_member(seed, level == 0 ? 8 : 16);
      if (m.empty()) continue;
      SolveReport s = solve_minimal(m, prm);
      o5.require(s.status == SolveStatus::Converged, "family solve converged");
      if (s.status != SolveStatus::Converged) continue;
      KappaTable kt = build_ball_kappa_table(m, prm, g.points, table_options());
      record_sup_bound(kt, prm, g.points);
      TwoSidedReport tr = verify_two_sided(s, m, prm, kt, g.points);
      o5.require(std::isfinite(tr.spread) && tr.min > 0.0, "finite max/min");
      band[level] = std::max(band[level], tr.spread);
      KappaTable ct = build_cube_kappa_table(m, prm, cell_level(m), table_options());
      CriteriaReport ewr = verify_enhanced_wolff(m, prm, prm.r, ct);
      if (!(ewr.constant("B") <= ewr.constant("A"))) ++fails_direction;
      ew[level] = ewr.constant("ratio");
      ew_max[level] = std::max(ew_max[level], ew[level]);
    }
    if (ew[0] > 0.0 && ew[1] > 0.0) {
      ++instances;
      ew_worst_drift = std::max(ew_worst_drift, rel(ew[1], ew[0]));
    }
  }
  const double drift = rel(band[1], band[0]);
  o5.detail << "band (max spread over 20 instances) " << band[0] << " at 8^2 cells, " << band[1]
            << " at 16^2, drift " << drift << "; ";
  o5.require(drift < 0.10, "band refinement drift");

  // Standard parameters in n = 3 as a second refinement pair.
  Params sp = kStandard;
  sp.r = 4.0;
  double std_ratio[2];
  for (int level = 0; level < 2; ++level) {
    GridMeasure m = standard_ball(level == 0 ? 8 : 16, 2);
    KappaTable ct = build_cube_kappa_table(m, sp, cell_level(m), table_options());
    CriteriaReport ewr = verify_enhanced_wolff(m, sp, sp.r, ct);
    if (!(ewr.constant("B") <= ewr.constant("A"))) ++fails_direction;
    std_ratio[level] = ewr.constant("ratio");
  }
  const double std_drift = rel(std_ratio[1], std_ratio[0]);
  o6.detail << "B <= A violations " << fails_direction << " of " << 2 * instances + 2 << "; family A/B max "
            << ew_max[0] << " -> " << ew_max[1] << ", worst per-instance drift " << ew_worst_drift
            << "; unit ball A/B " << std_ratio[0] << " -> " << std_ratio[1] << " (drift " << std_drift << "); ";
  o6.require(fails_direction == 0, "exact direction B <= A");
  o6.require(ew_worst_drift < 0.10, "family A/B refinement drift");
  o6.require(std_drift < 0.10, "unit ball A/B refinement drift");
}

void c7(Outcome& o) {
  // Standard parameters and cells; one pseudo-atom per cell keeps the ball
  // tables affordable.
  GridMeasure m = standard_ball(16, 1);
  const double thr = kStandard.lr_threshold();
  SpatialGrid g = ball_grid(Point(3, 0.0), 2.0, 2);
  KappaTable kt = build_ball_kappa_table(m, kStandard, g.points, table_options());
  record_sup_bound(kt, kStandard, g.points);
  for (double r : {3.0, 3.5, 4.0}) {
    CriteriaReport rep = lr_existence(m, kStandard, r, kt, g);
    const double v = rep.constant("value");
    o.detail << "r=" << r << " " << to_string(rep.verdict) << " (" << v << "); ";
    if (r <= thr)
      o.require(rep.verdict == Verdict::TrivialOnly, "TrivialOnly at the threshold");
    else
      o.require(rep.verdict == Verdict::Holds && std::isfinite(v), "Holds with a finite value above the threshold");
  }
  CriteriaReport above = lr_existence(m, kStandard, std::nextafter(thr, kInf), kt, g);
  o.require(above.verdict == Verdict::Holds, "flip one step above the threshold");
  for (double r : {3.0, 3.5, 4.0}) {
    ShellProfile sp = lr_domain_doubling(m, kStandard, r, 512.0 * m.support_radius(), 4, 32, table_options());
    const double tol = sp.predicted_slope == 0.0 ? 0.05 : 0.05 * std::abs(sp.predicted_slope);
    double worst = 0.0;
    for (double s : sp.log2_slopes) worst = std::max(worst, std::abs(s - sp.predicted_slope));
    o.detail << "slope r=" << r << " pred " << sp.predicted_slope << " last " << sp.log2_slopes.back() << "; ";
    o.require(worst <= tol, "domain-doubling slope within 5%");
  }
}

void c8(Outcome& o) {
  // Standard ball at subsample 2 on an extra probe grid, plus the tables of
  // criteria 5 and 7.
  GridMeasure m = standard_ball(8, 2);
  SpatialGrid g = ball_grid(Point{0.1, -0.05, 0.0}, 1.6, 4);
  KappaTable kt = build_ball_kappa_table(m, kStandard, g.points, table_options());
  record_sup_bound(kt, kStandard, g.points);
  double worst = 0.0;
  for (double v : sup_bound_violations) worst = std::max(worst, v);
  o.detail << sup_bound_violations.size() << " probes, max sup/((2^gamma/ln 2) K) " << worst << "; ";
  o.require(!sup_bound_violations.empty(), "probes present");
  o.require(worst <= 1.0, "sup <= (2^gamma/ln 2) K");
}

void c9(Outcome& o) {
  const Params& prm = kStandard;
  double lo = kInf, hi = 0.0, worst_z = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    MeasureSpec s;
    s.kind = MeasureSpec::Kind::RandomCells;
    s.dim = 3;
    s.cells = 6;
    s.subsample = 1;
    s.blocks = 3;
    s.sparsity = 0.3;
    s.seed = seed;
    GridMeasure m = build_grid_measure(s);
    if (m.empty()) continue;
    CriteriaReport rep = verify_wolff_inequality(m, prm, QuadratureSpec{20000, 1000 + seed});
    o.require(rep.verdict == Verdict::Holds, "Fubini within 3 standard errors");
    const double ratio = rep.constant("ratio_energy_wolff");
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    double se = std::hypot(rep.constant("energy_std_error"), rep.constant("hm_std_error"));
    worst_z = std::max(worst_z, rep.constant("fubini_gap") / se);
  }
  o.detail << "worst Fubini gap " << worst_z << " SE; E / int W dsigma in [" << lo << ", " << hi << "]; ";
  o.require(hi / lo <= 3.0, "factor-3 band");
}

void c10(Outcome& o) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "wolffkit-acceptance";
  fs::remove_all(root);
  const nlohmann::json cfg = nlohmann::json::parse(R"({
    "params": {"n": 3, "alpha": "1", "p": "2", "q": "0.5", "r": "4"},
    "measure": {"kind": "random-cells", "cells": 6, "subsample": 2, "blocks": 3, "sparsity": "0.3"},
    "probes": {"kind": "grid", "per_axis": 2},
    "quadrature": {"samples": 4000},
    "seed": 7
  })");
  struct Cmd {
    const char* command;
    const char* target;
  };
  const Cmd cmds[] = {{"gen", ""},         {"potential", ""},        {"solve", ""},
                      {"kappa", ""},       {"intrinsic", ""},        {"criteria", "lr-existence"},
                      {"criteria", "bmo"}, {"criteria", "cap-p"},    {"verify", "wolff-inequality"},
                      {"verify", "enhanced-wolff"}, {"verify", "two-sided"}, {"bench", ""}};
  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  int compared = 0;
  for (const Cmd& c : cmds) {
    std::vector<std::string> bodies[3];
    int k = 0;
    for (int threads : {1, 8, 1}) {
      cli::RunOptions opt;
      opt.threads = threads;
      opt.out_dir = (root / (std::to_string(k) + "-" + std::to_string(threads))).string();
      cli::RunResult r = cli::run(c.command, c.target, cfg, opt);
      o.require(r.exit_code == 0, std::string(c.command) + " " + c.target + " exit " + std::to_string(r.exit_code));
      for (const auto& a : r.artifacts) bodies[k].push_back(slurp(a));
      ++k;
    }
    o.require(!bodies[0].empty(), std::string(c.command) + " wrote artifacts");
    o.require(bodies[0] == bodies[1], std::string(c.command) + " " + c.target + ": 1 vs 8 threads differ");
    o.require(bodies[0] == bodies[2], std::string(c.command) + " " + c.target + ": repeat differs");
    compared += static_cast<int>(bodies[0].size());
  }
  set_thread_count(1);
  fs::remove_all(root);
  o.detail << compared << " artifacts byte-identical across repeats and 1/8 threads; ";
}

}  // namespace

int main() {
  set_thread_count(1);
  Outcome out[10];
  std::vector<std::function<void()>> steps = {
      [&] { c1(out[0]); }, [&] { c2(out[1]); }, [&] { c3(out[2]); }, [&] { c4(out[3]); },
      [&] { c5_c6(out[4], out[5]); }, [&] { c7(out[6]); }, [&] { c8(out[7]); }, [&] { c9(out[8]); },
      [&] { c10(out[9]); }};
  const int owner[] = {0, 1, 2, 3, 4, 6, 7, 8, 9};
  for (std::size_t i = 0; i < steps.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    try {
      steps[i]();
    } catch (const std::exception& e) {
      out[owner[i]].require(false, std::string("exception: ") + e.what());
      if (owner[i] == 4) out[5].require(false, std::string("exception: ") + e.what());
    }
    std::fprintf(stderr, "[step %zu took %.1f s]\n", i + 1, seconds_since(t0));
  }
  int failed = 0;
  for (int i = 0; i < 10; ++i) {
    std::printf("criterion %d: %s  %s\n", i + 1, out[i].pass ? "PASS" : "FAIL", out[i].detail.str().c_str());
    failed += out[i].pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
