#include "wolffkit/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "wolffkit/format.hpp"

namespace wolffkit {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidArgument("not a decimal number: '" + std::string(s) + "'");
  return v;
}

Metadata params_metadata(const Params& prm) {
  return {{"n", std::to_string(prm.n)},
          {"alpha", format_double(prm.alpha)},
          {"p", format_double(prm.p)},
          {"q", format_double(prm.q)},
          {"r", format_double(prm.r)},
          {"version", kLibraryVersion}};
}

namespace {

void write_meta(std::ostream& out, const Metadata& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

void write_points(std::ostream& out, const Field& f) {
  for (int d = 0; d < f.dim; ++d) out << 'x' << d + 1 << ',';
}

}  // namespace

void write_field_csv(const Field& f, std::ostream& out, const Metadata& meta) {
  write_meta(out, meta);
  if (!f.note.empty()) out << "# note=" << f.note << '\n';
  write_points(out, f);
  out << "value\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (double c : f.point(i)) out << format_double(c) << ',';
    out << format_double(f.values[i]) << '\n';
  }
}

void write_solve_csv(const SolveReport& rep, std::ostream& out, const Metadata& meta) {
  write_meta(out, meta);
  out << "# iterations=" << rep.iterations << '\n'
      << "# residual=" << format_double(rep.residual) << '\n'
      << "# status=" << to_string(rep.status) << '\n'
      << "# bracket_min=" << format_double(rep.bracket_min) << '\n'
      << "# bracket_max=" << format_double(rep.bracket_max) << '\n';
  if (!rep.message.empty()) out << "# message=" << rep.message << '\n';
  write_points(out, rep.u);
  out << "u\n";
  for (std::size_t i = 0; i < rep.u.size(); ++i) {
    for (double c : rep.u.point(i)) out << format_double(c) << ',';
    out << format_double(rep.u.values[i]) << '\n';
  }
}

void write_kappa_csv(const KappaTable& kt, std::ostream& out, const Metadata& meta) {
  write_meta(out, meta);
  out << "# global_kappa=" << format_double(kt.global_kappa) << '\n';
  if (kt.has_cubes) out << "# levels=" << kt.j_min << ".." << kt.j_max << '\n';
  for (const auto& f : kt.failures) out << "# failure=" << f << '\n';
  out << "region_id,kappa_est,kappa_lb,iters,residual\n";
  for (const auto& [id, e] : kt.entries)
    out << '"' << id << "\"," << format_double(e.kappa_est) << ',' << format_double(e.kappa_lb) << ',' << e.iterations << ','
        << format_double(e.residual) << '\n';
}

}  // namespace wolffkit
