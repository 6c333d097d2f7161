#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "wolffkit/criteria.hpp"
#include "wolffkit/dyadic.hpp"
#include "wolffkit/format.hpp"
#include "wolffkit/io.hpp"
#include "wolffkit/kappa.hpp"
#include "wolffkit/parallel.hpp"
#include "wolffkit/solver.hpp"

namespace wolffkit::cli {

using json = nlohmann::json;

namespace {

// ---- config parsing --------------------------------------------------------

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidArgument(where + " must be an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw InvalidArgument("unknown key '" + k + "' in " + where);
}

double as_double(const json& v, const std::string& what) {
  if (v.is_string()) return parse_double(v.get<std::string>());
  if (v.is_number()) return v.get<double>();
  throw InvalidArgument(what + " must be a decimal string or a number");
}

std::int64_t as_int(const json& v, const std::string& what) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  double d = as_double(v, what);
  if (d != std::floor(d) || std::abs(d) > 9e15) throw InvalidArgument(what + " must be an integer");
  return static_cast<std::int64_t>(d);
}

std::uint64_t as_u64(const json& v, const std::string& what) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t used = 0;
    std::uint64_t out = 0;
    try {
      out = std::stoull(s, &used, 10);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || s[0] == '-') throw InvalidArgument(what + " must be an unsigned integer");
    return out;
  }
  std::int64_t i = as_int(v, what);
  if (i < 0) throw InvalidArgument(what + " must be >= 0");
  return static_cast<std::uint64_t>(i);
}

Point as_point(const json& v, const std::string& what) {
  if (!v.is_array()) throw InvalidArgument(what + " must be an array");
  Point p;
  for (const auto& c : v) p.push_back(as_double(c, what));
  return p;
}

double get_double(const json& obj, const char* key, double def, const std::string& where) {
  return obj.contains(key) ? as_double(obj[key], where + "." + key) : def;
}
int get_int(const json& obj, const char* key, int def, const std::string& where) {
  return obj.contains(key) ? static_cast<int>(as_int(obj[key], where + "." + key)) : def;
}

struct ProbeSpec {
  enum class Kind { Default, Cells, Points, Grid } kind = Kind::Default;
  std::vector<double> points;
  Point center;
  double radius = 0.0;
  int per_axis = 4;
};

struct RunConfig {
  Params prm;
  MeasureSpec measure;
  ProbeSpec probes;
  KappaOptions kopt;
  QuadratureSpec quad;
  bool cube_table = false;
  std::optional<int> j_max;
  std::string potential_kind = "wolff";
  double beta = 0.0;
  bool near_field = true;
  json lr = json::object();
  std::vector<double> ball_radii;
  double sum_table_scale = 1.0;
  int bench_repeats = 3;
};

RunConfig parse_config(const json& cfg) {
  check_keys(cfg, {"params", "measure", "probes", "solver", "radius_grid", "kappa", "quadrature", "potential", "lr",
                   "balls", "fault", "seed", "bench"},
             "config");
  RunConfig rc;
  if (!cfg.contains("params")) throw InvalidArgument("config needs a params object");
  const json& p = cfg["params"];
  check_keys(p, {"n", "alpha", "p", "q", "r"}, "params");
  rc.prm.n = get_int(p, "n", 3, "params");
  rc.prm.alpha = get_double(p, "alpha", 1.0, "params");
  rc.prm.p = get_double(p, "p", 2.0, "params");
  rc.prm.q = get_double(p, "q", 0.5, "params");
  rc.prm.r = get_double(p, "r", 0.0, "params");
  rc.prm.validate_kernel();

  const std::uint64_t seed = cfg.contains("seed") ? as_u64(cfg["seed"], "seed") : 0;
  MeasureSpec& ms = rc.measure;
  ms.dim = rc.prm.n;
  ms.seed = seed;
  if (cfg.contains("measure")) {
    const json& m = cfg["measure"];
    check_keys(m, {"kind", "dim", "center", "radius", "inner_radius", "exponent", "total_mass", "box_lo", "box_hi",
                   "cells", "subsample", "seed", "sparsity", "blocks", "path"},
               "measure");
    if (m.contains("kind")) ms.kind = measure_kind_from_string(m["kind"].get<std::string>());
    ms.dim = get_int(m, "dim", rc.prm.n, "measure");
    if (m.contains("center")) ms.center = as_point(m["center"], "measure.center");
    ms.radius = get_double(m, "radius", ms.radius, "measure");
    ms.inner_radius = get_double(m, "inner_radius", ms.inner_radius, "measure");
    ms.exponent = get_double(m, "exponent", ms.exponent, "measure");
    ms.total_mass = get_double(m, "total_mass", ms.total_mass, "measure");
    if (m.contains("box_lo")) ms.box_lo = as_point(m["box_lo"], "measure.box_lo");
    if (m.contains("box_hi")) ms.box_hi = as_point(m["box_hi"], "measure.box_hi");
    ms.cells = get_int(m, "cells", ms.cells, "measure");
    ms.subsample = get_int(m, "subsample", ms.subsample, "measure");
    if (m.contains("seed")) ms.seed = as_u64(m["seed"], "measure.seed");
    ms.sparsity = get_double(m, "sparsity", ms.sparsity, "measure");
    ms.blocks = get_int(m, "blocks", ms.blocks, "measure");
    if (m.contains("path")) ms.path = m["path"].get<std::string>();
  }
  if (ms.dim != rc.prm.n) throw InvalidArgument("measure.dim must equal params.n");

  if (cfg.contains("probes")) {
    const json& pr = cfg["probes"];
    check_keys(pr, {"kind", "points", "center", "radius", "per_axis"}, "probes");
    const std::string kind = pr.value("kind", std::string("grid"));
    if (kind == "cells") {
      rc.probes.kind = ProbeSpec::Kind::Cells;
    } else if (kind == "points") {
      rc.probes.kind = ProbeSpec::Kind::Points;
      if (!pr.contains("points") || !pr["points"].is_array()) throw InvalidArgument("probes.points must be an array");
      for (const auto& pt : pr["points"]) {
        Point x = as_point(pt, "probes.points");
        if (static_cast<int>(x.size()) != rc.prm.n) throw InvalidArgument("probe point has wrong dimension");
        rc.probes.points.insert(rc.probes.points.end(), x.begin(), x.end());
      }
    } else if (kind == "grid") {
      rc.probes.kind = ProbeSpec::Kind::Grid;
      if (pr.contains("center")) rc.probes.center = as_point(pr["center"], "probes.center");
      rc.probes.radius = get_double(pr, "radius", 0.0, "probes");
      rc.probes.per_axis = get_int(pr, "per_axis", 4, "probes");
    } else {
      throw InvalidArgument("probes.kind must be cells, points or grid");
    }
  }
  if (cfg.contains("solver")) {
    const json& s = cfg["solver"];
    check_keys(s, {"tol", "max_iters", "overflow", "max_cached_pairs"}, "solver");
    SolverOptions& so = rc.kopt.solver;
    so.tol = get_double(s, "tol", so.tol, "solver");
    so.max_iters = get_int(s, "max_iters", so.max_iters, "solver");
    so.overflow = get_double(s, "overflow", so.overflow, "solver");
    if (s.contains("max_cached_pairs")) so.max_cached_pairs = as_u64(s["max_cached_pairs"], "solver.max_cached_pairs");
    if (!(so.tol > 0.0) || so.max_iters < 1) throw InvalidArgument("solver.tol must be > 0 and max_iters >= 1");
  }
  if (cfg.contains("radius_grid")) {
    const json& g = cfg["radius_grid"];
    check_keys(g, {"per_decade", "window", "min_radius"}, "radius_grid");
    rc.kopt.grid.per_decade = get_int(g, "per_decade", rc.kopt.grid.per_decade, "radius_grid");
    rc.kopt.grid.window = get_int(g, "window", rc.kopt.grid.window, "radius_grid");
    rc.kopt.grid.min_radius = get_double(g, "min_radius", 0.0, "radius_grid");
  }
  if (cfg.contains("kappa")) {
    const json& k = cfg["kappa"];
    check_keys(k, {"table", "j_max", "lower_bounds", "lb_probes"}, "kappa");
    const std::string t = k.value("table", std::string("balls"));
    if (t != "balls" && t != "cubes") throw InvalidArgument("kappa.table must be balls or cubes");
    rc.cube_table = t == "cubes";
    if (k.contains("j_max")) rc.j_max = static_cast<int>(as_int(k["j_max"], "kappa.j_max"));
    if (k.contains("lower_bounds")) rc.kopt.lower_bounds = k["lower_bounds"].get<bool>();
    rc.kopt.lb_probes = get_int(k, "lb_probes", rc.kopt.lb_probes, "kappa");
  }
  rc.quad.seed = seed + 1;
  if (cfg.contains("quadrature")) {
    const json& q = cfg["quadrature"];
    check_keys(q, {"samples", "seed"}, "quadrature");
    if (q.contains("samples")) rc.quad.samples = as_u64(q["samples"], "quadrature.samples");
    if (q.contains("seed")) rc.quad.seed = as_u64(q["seed"], "quadrature.seed");
    if (rc.quad.samples < 2) throw InvalidArgument("quadrature.samples must be >= 2");
  }
  if (cfg.contains("potential")) {
    const json& pt = cfg["potential"];
    check_keys(pt, {"kind", "beta", "near_field"}, "potential");
    rc.potential_kind = pt.value("kind", std::string("wolff"));
    rc.beta = get_double(pt, "beta", rc.prm.alpha, "potential");
    if (pt.contains("near_field")) rc.near_field = pt["near_field"].get<bool>();
  } else {
    rc.beta = rc.prm.alpha;
  }
  if (cfg.contains("lr")) {
    rc.lr = cfg["lr"];
    check_keys(rc.lr, {"grid_radius", "per_axis", "R", "first_radius", "shells", "directions"}, "lr");
  }
  if (cfg.contains("balls")) {
    check_keys(cfg["balls"], {"radii"}, "balls");
    if (cfg["balls"].contains("radii"))
      for (const auto& r : cfg["balls"]["radii"]) rc.ball_radii.push_back(as_double(r, "balls.radii"));
  }
  if (cfg.contains("fault")) {
    check_keys(cfg["fault"], {"sum_table_scale"}, "fault");
    rc.sum_table_scale = get_double(cfg["fault"], "sum_table_scale", 1.0, "fault");
  }
  if (cfg.contains("bench")) {
    check_keys(cfg["bench"], {"repeats"}, "bench");
    rc.bench_repeats = get_int(cfg["bench"], "repeats", 3, "bench");
  }
  return rc;
}

// ---- output helpers --------------------------------------------------------

json jnum(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json point_json(std::span<const double> x) {
  json a = json::array();
  for (double c : x) a.push_back(jnum(c));
  return a;
}

json params_json(const Params& prm) {
  return {{"n", prm.n},
          {"alpha", format_double(prm.alpha)},
          {"p", format_double(prm.p)},
          {"q", format_double(prm.q)},
          {"r", format_double(prm.r)}};
}

json report_json(const CriteriaReport& rep) {
  json c = json::object(), t = json::object();
  for (const auto& [k, v] : rep.constants) c[k] = jnum(v);
  for (const auto& [k, v] : rep.tolerances) t[k] = jnum(v);
  return {{"name", rep.name},
          {"verdict", to_string(rep.verdict)},
          {"constants", c},
          {"tolerances", t},
          {"witnesses", rep.witnesses},
          {"notes", rep.notes}};
}

struct Context {
  std::string command, target, hash;
  RunConfig rc;
  RunOptions opt;
  RunResult result;

  std::string stem() const { return command + "-" + hash; }

  Metadata meta() const {
    Metadata m = params_metadata(rc.prm);
    m.insert(m.begin(), {"command", target.empty() ? command : command + " " + target});
    m.insert(m.begin() + 1, {"config_hash", hash});
    return m;
  }

  void write(const std::string& ext, const std::string& body) {
    std::filesystem::create_directories(opt.out_dir);
    std::filesystem::path path = std::filesystem::path(opt.out_dir) / (stem() + "." + ext);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + path.string());
    f << body;
    if (!f) throw InvalidArgument("cannot write " + path.string());
    result.artifacts.push_back(path.string());
  }

  void write_json(json payload) {
    payload["command"] = command;
    if (!target.empty()) payload["target"] = target;
    payload["config_hash"] = hash;
    payload["version"] = kLibraryVersion;
    payload["params"] = params_json(rc.prm);
    write("json", payload.dump(2) + "\n");
  }

  template <class F>
  void write_csv(F&& body) {
    std::ostringstream os;
    body(os);
    write("csv", os.str());
  }

  void verdict(const CriteriaReport& rep) {
    write_json({{"report", report_json(rep)}});
    if (opt.assert_verdicts && rep.verdict == Verdict::Fails) {
      result.exit_code = kAssertFailed;
      result.message = rep.name + ": verdict Fails";
    }
  }
};

std::vector<double> resolve_probes(const RunConfig& rc, const GridMeasure& m, ProbeSpec::Kind fallback) {
  ProbeSpec::Kind kind = rc.probes.kind == ProbeSpec::Kind::Default ? fallback : rc.probes.kind;
  switch (kind) {
    case ProbeSpec::Kind::Cells:
      return {m.cell_centers().begin(), m.cell_centers().end()};
    case ProbeSpec::Kind::Points:
      return rc.probes.points;
    default: {
      Point c = rc.probes.center;
      if (c.empty()) c = m.empty() ? Point(rc.prm.n, 0.0) : m.support_center();
      if (static_cast<int>(c.size()) != rc.prm.n) throw InvalidArgument("probes.center has wrong dimension");
      double r = rc.probes.radius > 0.0 ? rc.probes.radius : (m.empty() ? 1.0 : 1.5 * m.support_radius());
      return ball_grid(c, r, rc.probes.per_axis).points;
    }
  }
}

KappaTable cube_table(const RunConfig& rc, const GridMeasure& m) {
  int j_max = rc.j_max ? *rc.j_max : (m.empty() ? 0 : cell_level(m));
  return build_cube_kappa_table(m, rc.prm, j_max, rc.kopt);
}

// ---- commands --------------------------------------------------------------

void cmd_gen(Context& cx, const GridMeasure& m) {
  cx.write_csv([&](std::ostream& os) {
    for (const auto& [k, v] : cx.meta()) os << "# " << k << '=' << v << '\n';
    write_measure_csv(m, os);
  });
  json j = {{"kind", to_string(cx.rc.measure.kind)},
            {"cells", m.cell_count()},
            {"atoms", m.atom_count()},
            {"total_mass", jnum(m.total_mass())},
            {"mass_unit", jnum(m.mass_unit())}};
  if (!m.empty()) {
    j["support_center"] = point_json(m.support_center());
    j["support_radius"] = jnum(m.support_radius());
  }
  cx.write_json(j);
}

void cmd_potential(Context& cx, const GridMeasure& m) {
  const RunConfig& rc = cx.rc;
  std::vector<double> pts = resolve_probes(rc, m, ProbeSpec::Kind::Cells);
  Field f;
  const std::string& kind = rc.potential_kind;
  if (kind == "wolff") {
    f = wolff_field(m, rc.prm, pts, WolffOptions{rc.near_field});
  } else if (kind == "riesz") {
    f = riesz_field(m, rc.beta, pts);
  } else if (kind == "riesz-density" || kind == "havin-mazya") {
    f.dim = m.empty() ? rc.prm.n : m.dim();
    f.points = pts;
    f.values.resize(pts.size() / f.dim);
    if (kind == "havin-mazya") rc.prm.validate_kernel();
    parallel_for(f.values.size(), [&](std::size_t i) {
      auto x = std::span<const double>(pts).subspan(i * f.dim, f.dim);
      f.values[i] = kind == "riesz-density" ? riesz_density(m, rc.beta, x) : havin_mazya(m, rc.prm, x, rc.quad).value;
    });
    for (std::size_t i = 0; i < f.values.size(); ++i)
      if (!std::isfinite(f.values[i])) f.flagged.push_back(i);
  } else {
    throw InvalidArgument("potential.kind must be wolff, riesz, riesz-density or havin-mazya");
  }
  cx.write_csv([&](std::ostream& os) { write_field_csv(f, os, cx.meta()); });
  double lo = kInf, hi = -kInf;
  for (double v : f.values) lo = std::min(lo, v), hi = std::max(hi, v);
  json j = {{"kind", kind}, {"points", f.size()}, {"flagged", f.flagged.size()}, {"note", f.note}};
  if (f.size()) j["min"] = jnum(lo), j["max"] = jnum(hi);
  cx.write_json(j);
}

void cmd_solve(Context& cx, const GridMeasure& m) {
  cx.rc.prm.validate();
  SolveReport rep = solve_minimal(m, cx.rc.prm, cx.rc.kopt.solver);
  cx.write_csv([&](std::ostream& os) { write_solve_csv(rep, os, cx.meta()); });
  json hist = json::array();
  for (double h : rep.residual_history) hist.push_back(jnum(h));
  cx.write_json({{"status", to_string(rep.status)},
                 {"iterations", rep.iterations},
                 {"residual", jnum(rep.residual)},
                 {"bracket_min", jnum(rep.bracket_min)},
                 {"bracket_max", jnum(rep.bracket_max)},
                 {"residual_history", hist},
                 {"message", rep.message}});
  if (rep.status == SolveStatus::NonFinite || rep.status == SolveStatus::MaxIters) {
    cx.result.exit_code = kNumeric;
    cx.result.message = "solve: " + to_string(rep.status) + (rep.message.empty() ? "" : " (" + rep.message + ")");
  }
}

void cmd_kappa(Context& cx, const GridMeasure& m) {
  cx.rc.prm.validate();
  KappaTable kt = cx.rc.cube_table ? cube_table(cx.rc, m)
                                   : build_ball_kappa_table(m, cx.rc.prm, resolve_probes(cx.rc, m, ProbeSpec::Kind::Grid),
                                                            cx.rc.kopt);
  cx.write_csv([&](std::ostream& os) { write_kappa_csv(kt, os, cx.meta()); });
  json j = {{"table", cx.rc.cube_table ? "cubes" : "balls"},
            {"global_kappa", jnum(kt.global_kappa)},
            {"entries", kt.entries.size()},
            {"failures", kt.failures}};
  if (kt.has_cubes) j["j_min"] = kt.j_min, j["j_max"] = kt.j_max;
  cx.write_json(j);
  if (!kt.failures.empty()) {
    cx.result.exit_code = kNumeric;
    cx.result.message = "kappa: " + std::to_string(kt.failures.size()) + " region solves failed";
  }
}

void cmd_intrinsic(Context& cx, const GridMeasure& m) {
  const RunConfig& rc = cx.rc;
  rc.prm.validate();
  std::vector<double> pts = resolve_probes(rc, m, ProbeSpec::Kind::Grid);
  KappaTable kt = build_ball_kappa_table(m, rc.prm, pts, rc.kopt);
  std::optional<KappaTable> ct;
  if (rc.cube_table) ct = cube_table(rc, m);
  const int n = rc.prm.n;
  const std::size_t np = pts.size() / n;
  std::vector<double> K(np), S(np), Kd(np);
  parallel_for(np, [&](std::size_t i) {
    auto x = std::span<const double>(pts).subspan(i * n, n);
    K[i] = intrinsic_potential(kt, rc.prm, x);
    S[i] = sup_functional(kt, rc.prm, x);
    if (ct) Kd[i] = dyadic_intrinsic(*ct, rc.prm, x);
  });
  cx.write_csv([&](std::ostream& os) {
    for (const auto& [k, v] : cx.meta()) os << "# " << k << '=' << v << '\n';
    os << "# global_kappa=" << format_double(kt.global_kappa) << '\n';
    for (int d = 0; d < n; ++d) os << 'x' << d + 1 << ',';
    os << "K,sup" << (ct ? ",Kd" : "") << '\n';
    for (std::size_t i = 0; i < np; ++i) {
      for (int d = 0; d < n; ++d) os << format_double(pts[i * n + d]) << ',';
      os << format_double(K[i]) << ',' << format_double(S[i]);
      if (ct) os << ',' << format_double(Kd[i]);
      os << '\n';
    }
  });
  double worst = 0.0;
  for (std::size_t i = 0; i < np; ++i)
    if (K[i] > 0.0) worst = std::max(worst, S[i] / K[i]);
  cx.write_json({{"points", np},
                 {"global_kappa", jnum(kt.global_kappa)},
                 {"max_sup_over_K", jnum(worst)},
                 {"sup_bound_constant", jnum(sup_bound_constant(rc.prm))}});
}

ShellProfile domain_doubling(const RunConfig& rc, const GridMeasure& m) {
  const double rs = m.empty() ? 1.0 : std::max(m.support_radius(), m.near_radius());
  const double first = get_double(rc.lr, "first_radius", 512.0 * rs, "lr");
  const int shells = get_int(rc.lr, "shells", 4, "lr");
  const int dirs = get_int(rc.lr, "directions", rc.prm.n == 2 ? 16 : 32, "lr");
  return lr_domain_doubling(m, rc.prm, rc.prm.r, first, shells, dirs, rc.kopt);
}

void cmd_criteria(Context& cx, const GridMeasure& m) {
  const RunConfig& rc = cx.rc;
  const Params& prm = rc.prm;
  prm.validate();
  const std::string& t = cx.target;
  const double rs = m.empty() ? 1.0 : m.support_radius();
  const Point c = m.empty() ? Point(prm.n, 0.0) : m.support_center();
  if (t == "lr-existence") {
    SpatialGrid g = ball_grid(c, get_double(rc.lr, "grid_radius", 2.0 * rs, "lr"), get_int(rc.lr, "per_axis", 4, "lr"));
    KappaTable kt = build_ball_kappa_table(m, prm, g.points, rc.kopt);
    cx.verdict(lr_existence(m, prm, prm.r, kt, g));
  } else if (t == "lr-domain-doubling") {
    if (m.empty()) throw InvalidArgument("domain doubling needs a nonzero measure");
    ShellProfile sp = domain_doubling(rc, m);
    CriteriaReport rep;
    rep.name = "lr-domain-doubling";
    rep.set("predicted_slope", sp.predicted_slope);
    const double tol = std::max(0.05 * std::abs(sp.predicted_slope), sp.predicted_slope == 0.0 ? 0.05 : 0.0);
    rep.tolerances.emplace_back("slope", tol);
    bool ok = true;
    for (std::size_t k = 0; k < sp.integrals.size(); ++k) {
      rep.set("shell_" + std::to_string(k) + "_inner_radius", sp.inner_radii[k]);
      rep.set("shell_" + std::to_string(k) + "_integral", sp.integrals[k]);
    }
    for (std::size_t k = 0; k < sp.log2_slopes.size(); ++k) {
      rep.set("slope_" + std::to_string(k), sp.log2_slopes[k]);
      if (!(std::abs(sp.log2_slopes[k] - sp.predicted_slope) <= tol)) ok = false;
    }
    rep.verdict = ok ? Verdict::Holds : Verdict::Fails;
    rep.notes.push_back(sp.predicted_slope < 0.0 ? "shell integrals decay: L^r integral converges"
                                                 : "shell integrals do not decay: L^r integral diverges");
    cx.verdict(rep);
  } else if (t == "lr-local") {
    const double R = get_double(rc.lr, "R", rs, "lr");
    SpatialGrid g = ball_grid(Point(prm.n, 0.0), R, get_int(rc.lr, "per_axis", 4, "lr"));
    KappaTable kt = build_ball_kappa_table(m, prm, g.points, rc.kopt);
    std::optional<KappaTable> ct;
    if (rc.cube_table) ct = cube_table(rc, m);
    cx.verdict(lr_local_existence(m, prm, prm.r, R, kt, g, ct ? &*ct : nullptr));
  } else if (t == "bmo") {
    KappaTable kt = build_ball_kappa_table(m, prm, resolve_probes(rc, m, ProbeSpec::Kind::Grid), rc.kopt);
    cx.verdict(bmo_criteria(m, prm, kt));
  } else if (t == "bmo-wolff" || t == "cap-p" || t == "class1") {
    std::vector<double> radii = rc.ball_radii;
    if (radii.empty())
      for (int k = -3; k <= 3; ++k) radii.push_back(rs * std::exp2(k));
    std::vector<double> pts = resolve_probes(rc, m, ProbeSpec::Kind::Grid);
    std::vector<Ball> sample = sample_balls(pts, prm.n, radii);
    if (t == "bmo-wolff")
      cx.verdict(bmo_wolff_criterion(m, prm, sample));
    else
      cx.verdict(capacity_ball_criterion(m, prm, sample, t == "cap-p" ? CapacityMode::CapP : CapacityMode::Class1));
  } else {
    throw InvalidArgument("unknown criterion '" + t +
                          "' (lr-existence, lr-domain-doubling, lr-local, bmo, bmo-wolff, cap-p, class1)");
  }
}

void cmd_verify(Context& cx, const GridMeasure& m) {
  const RunConfig& rc = cx.rc;
  const Params& prm = rc.prm;
  const std::string& t = cx.target;
  if (t == "wolff-inequality") {
    CriteriaReport rep = verify_wolff_inequality(m, prm, rc.quad);
    cx.verdict(rep);
    if (rep.verdict == Verdict::Inconclusive) {
      cx.result.exit_code = kNumeric;
      cx.result.message = "wolff-inequality: energy diverges";
    }
  } else if (t == "enhanced-wolff") {
    prm.validate();
    KappaTable ct = cube_table(rc, m);
    cx.verdict(verify_enhanced_wolff(m, prm, prm.r, ct, EnhancedWolffOptions{rc.sum_table_scale}));
  } else if (t == "two-sided") {
    prm.validate();
    CriteriaReport rep;
    rep.name = "two-sided";
    SolveReport s = solve_minimal(m, prm, rc.kopt.solver);
    rep.notes.push_back("solve status " + to_string(s.status));
    if (s.status == SolveStatus::TrivialOnly) {
      rep.verdict = Verdict::TrivialOnly;
    } else if (s.status != SolveStatus::Converged) {
      rep.verdict = Verdict::Inconclusive;
    } else {
      std::vector<double> pts = resolve_probes(rc, m, ProbeSpec::Kind::Grid);
      KappaTable kt = build_ball_kappa_table(m, prm, pts, rc.kopt);
      TwoSidedReport tr = verify_two_sided(s, m, prm, kt, pts);
      rep.set("ratio_min", tr.min);
      rep.set("ratio_max", tr.max);
      rep.set("spread", tr.spread);
      rep.verdict = std::isfinite(tr.spread) && tr.min > 0.0 ? Verdict::Holds : Verdict::Fails;
    }
    cx.verdict(rep);
  } else if (t == "sup-bound") {
    prm.validate();
    std::vector<double> pts = resolve_probes(rc, m, ProbeSpec::Kind::Grid);
    KappaTable kt = build_ball_kappa_table(m, prm, pts, rc.kopt);
    CriteriaReport rep;
    rep.name = "sup-bound";
    const double bound = sup_bound_constant(prm);
    double worst = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < pts.size() / prm.n; ++i) {
      auto x = std::span<const double>(pts).subspan(i * prm.n, prm.n);
      double K = intrinsic_potential(kt, prm, x), S = sup_functional(kt, prm, x);
      if (S > bound * K) {
        ok = false;
        rep.witnesses.push_back(ball_region_id(x, 0.0));
      }
      if (K > 0.0) worst = std::max(worst, S / K);
    }
    rep.set("bound_constant", bound);
    rep.set("max_sup_over_K", worst);
    rep.verdict = ok ? Verdict::Holds : Verdict::Fails;
    cx.verdict(rep);
  } else if (t == "triv") {
    prm.validate();
    KappaTable kt = build_ball_kappa_table(m, prm, resolve_probes(rc, m, ProbeSpec::Kind::Grid), rc.kopt);
    TrivReport tr = triv_check(kt, prm);
    CriteriaReport rep;
    rep.name = "triv";
    rep.set("constant", tr.constant);
    rep.set("worst_ratio", tr.worst_ratio);
    rep.verdict = tr.worst_ratio <= 1.0 + 1e-9 ? Verdict::Holds : Verdict::Fails;
    cx.verdict(rep);
  } else {
    throw InvalidArgument("unknown verifier '" + t + "' (wolff-inequality, enhanced-wolff, two-sided, sup-bound, triv)");
  }
}

// Timings go to the message only; the artifact holds checksums so it stays
// reproducible.
void cmd_bench(Context& cx, const GridMeasure& m) {
  const Params& prm = cx.rc.prm;
  prm.validate();
  using clock = std::chrono::steady_clock;
  std::ostringstream msg;
  json j = json::object();
  auto time = [&](const std::string& name, const std::function<double()>& f) {
    double best = kInf, value = 0.0;
    for (int k = 0; k < std::max(1, cx.rc.bench_repeats); ++k) {
      auto t0 = clock::now();
      value = f();
      best = std::min(best, std::chrono::duration<double>(clock::now() - t0).count());
    }
    j[name] = jnum(value);
    msg << name << ": " << format_double(best) << " s\n";
  };
  time("plan_build", [&] {
    SublinearOperator op(m, prm, cx.rc.kopt.solver.max_cached_pairs);
    return static_cast<double>(m.cell_count());
  });
  SublinearOperator op(m, prm, cx.rc.kopt.solver.max_cached_pairs);
  std::vector<double> one(m.cell_count(), 1.0);
  time("apply_T", [&] {
    auto v = op.apply(one);
    return pairwise_sum(v);
  });
  time("solve", [&] {
    SolveReport r = solve_minimal(m, prm, cx.rc.kopt.solver);
    return pairwise_sum(r.u.values);
  });
  j["cells"] = m.cell_count();
  j["atoms"] = m.atom_count();
  cx.write_json({{"checksums", j}});
  cx.result.message = msg.str();
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"gen", "potential", "solve", "kappa", "intrinsic", "criteria", "verify", "bench"};
  return c;
}

std::string usage() {
  return "usage: wolffkit <command> [target] --config <path> [--out <dir>] [--threads <k>] [--assert] [--seed <u64>]\n"
         "commands:\n"
         "  gen                       build the measure and export it\n"
         "  potential                 W, I_beta, density Riesz or Havin-Maz'ya potential at the probes\n"
         "  solve                     minimal solution of u = W(u^q sigma)\n"
         "  kappa                     kappa table (balls at the probes, or dyadic cubes)\n"
         "  intrinsic                 K and the sup functional at the probes\n"
         "  criteria <name>           lr-existence | lr-domain-doubling | lr-local | bmo | bmo-wolff | cap-p | class1\n"
         "  verify <name>             wolff-inequality | enhanced-wolff | two-sided | sup-bound | triv\n"
         "  bench                     time plan build, one T application and a solve\n"
         "environment: WOLFFKIT_CONFIG, WOLFFKIT_OUT, WOLFFKIT_THREADS, WOLFFKIT_SEED, WOLFFKIT_ASSERT\n";
}

std::string config_hash(const json& canonical) {
  const std::string s = canonical.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunResult run(const std::string& command, const std::string& target, const json& config, const RunOptions& opt) {
  Context cx;
  cx.command = command;
  cx.target = target;
  cx.opt = opt;
  const auto& cmds = commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) {
    cx.result.exit_code = kUsage;
    cx.result.message = "unknown command '" + command + "'\n" + usage();
    return cx.result;
  }
  try {
    if ((command == "criteria" || command == "verify") == target.empty())
      throw InvalidArgument(target.empty() ? command + " needs a target name" : command + " takes no target");
    json cfg = config;
    if (opt.seed) cfg["seed"] = *opt.seed;
    cx.hash = config_hash(json{{"command", command}, {"target", target}, {"config", cfg}});
    cx.rc = parse_config(cfg);
    if (opt.threads < 0) throw InvalidArgument("--threads must be >= 0");
    if (opt.threads > 0) set_thread_count(static_cast<unsigned>(opt.threads));
    GridMeasure m = build_grid_measure(cx.rc.measure);
    static const std::map<std::string, void (*)(Context&, const GridMeasure&)> table = {
        {"gen", cmd_gen},           {"potential", cmd_potential}, {"solve", cmd_solve},
        {"kappa", cmd_kappa},       {"intrinsic", cmd_intrinsic}, {"criteria", cmd_criteria},
        {"verify", cmd_verify},     {"bench", cmd_bench}};
    table.at(command)(cx, m);
  } catch (const Divergent& e) {
    cx.result.exit_code = kNumeric;
    cx.result.message = e.what();
  } catch (const NumericFailure& e) {
    cx.result.exit_code = kNumeric;
    cx.result.message = e.what();
  } catch (const Error& e) {
    cx.result.exit_code = kValidation;
    cx.result.message = e.what();
  } catch (const json::exception& e) {
    cx.result.exit_code = kValidation;
    cx.result.message = std::string("config: ") + e.what();
  }
  return cx.result;
}

}  // namespace wolffkit::cli
