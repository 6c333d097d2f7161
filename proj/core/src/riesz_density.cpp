#include <cmath>
#include <vector>

#include "wolffkit/potentials.hpp"

namespace wolffkit {

namespace {

constexpr double kG2[2] = {-0.5773502691896257, 0.5773502691896257};
constexpr double kW2[2] = {1.0, 1.0};
constexpr double kG4[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
constexpr double kW4[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};

// Tensor Gauss rule over the cube [c - h/2, c + h/2]^dim of (extra2 + |z - y|^2)^{-a/2}.
double gauss_cube(const double* c, int dim, double h, const double* y, double extra2, double a, const double* g,
                  const double* w, int np) {
  int idx[16] = {0};
  double acc = 0.0;
  for (;;) {
    double r2 = extra2, wt = 1.0;
    for (int d = 0; d < dim; ++d) {
      double z = c[d] + 0.5 * h * g[idx[d]] - y[d];
      r2 += z * z;
      wt *= w[idx[d]];
    }
    acc += wt * std::pow(r2, -0.5 * a);
    int d = dim - 1;
    while (d >= 0 && ++idx[d] == np) idx[d--] = 0;
    if (d < 0) break;
  }
  return acc * std::pow(0.5 * h, dim);
}

double distance_to_cube(const double* c, int dim, double h, const double* y) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) {
    double off = std::max(0.0, std::abs(y[d] - c[d]) - 0.5 * h);
    s += off * off;
  }
  return std::sqrt(s);
}

// Face integral over a (dim)-dimensional patch at normal offset hf from y.
double patch_integral(const double* c, int dim, double h, const double* y, double hf, double a, int depth) {
  if (dim == 0) return std::pow(hf, -a);
  double dn = distance_to_cube(c, dim, h, y);
  double eff = std::sqrt(hf * hf + dn * dn);
  if (eff >= 2.0 * h || depth == 0) return gauss_cube(c, dim, h, y, hf * hf, a, kG4, kW4, 4);
  double acc = 0.0;
  double cc[16];
  for (int mask = 0; mask < (1 << dim); ++mask) {
    for (int d = 0; d < dim; ++d) cc[d] = c[d] + ((mask >> d & 1) ? 0.25 : -0.25) * h;
    acc += patch_integral(cc, dim, 0.5 * h, y, hf, a, depth - 1);
  }
  return acc;
}

// y inside the closed cube: divergence theorem on |z - y|^{beta-n} (z - y).
double cube_integral_inside(const double* c, int n, double h, const double* y, double beta) {
  const double a = n - beta;
  double acc = 0.0;
  double fc[16], fy[16];
  for (int d = 0; d < n; ++d) {
    int k = 0;
    for (int e = 0; e < n; ++e)
      if (e != d) {
        fc[k] = c[e];
        fy[k] = y[e];
        ++k;
      }
    for (int sgn = -1; sgn <= 1; sgn += 2) {
      double hf = 0.5 * h - sgn * (y[d] - c[d]);
      if (hf <= 1e-12 * h) continue;
      acc += hf * patch_integral(fc, n - 1, h, fy, hf, a, 40);
    }
  }
  return acc / beta;
}

double cube_integral(const double* c, int n, double h, const double* y, double beta, int depth) {
  const double a = n - beta;
  double dn = distance_to_cube(c, n, h, y);
  if (dn == 0.0) return cube_integral_inside(c, n, h, y, beta);
  if (dn >= 16.0 * h) {
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) r2 += (c[d] - y[d]) * (c[d] - y[d]);
    return std::pow(h, n) * std::pow(r2, -0.5 * a);
  }
  if (dn >= 3.0 * h) return gauss_cube(c, n, h, y, 0.0, a, kG2, kW2, 2);
  if (dn >= h || depth == 0) return gauss_cube(c, n, h, y, 0.0, a, kG4, kW4, 4);
  double acc = 0.0;
  double cc[16];
  for (int mask = 0; mask < (1 << n); ++mask) {
    for (int d = 0; d < n; ++d) cc[d] = c[d] + ((mask >> d & 1) ? 0.25 : -0.25) * h;
    acc += cube_integral(cc, n, 0.5 * h, y, beta, depth - 1);
  }
  return acc;
}

}  // namespace

double cube_riesz_integral(std::span<const double> center, double side, std::span<const double> y, double beta) {
  const int n = static_cast<int>(center.size());
  if (n < 1 || n > 16 || y.size() != center.size()) throw InvalidArgument("bad dimension for cube integral");
  if (!(beta > 0.0) || !(beta < n)) throw InvalidArgument("Riesz order must satisfy 0 < beta < n");
  if (!(side > 0.0)) throw InvalidArgument("cube side must be > 0");
  return cube_integral(center.data(), n, side, y.data(), beta, 8);
}

double riesz_density(const GridMeasure& m, double beta, std::span<const double> y) {
  if (static_cast<int>(y.size()) != m.dim()) throw InvalidArgument("point has wrong dimension");
  if (!(beta > 0.0) || !(beta < m.dim())) throw InvalidArgument("Riesz order must satisfy 0 < beta < n");
  const int n = m.dim();
  const double vol = m.cell_volume();
  double acc = 0.0;
  for (std::size_t j = 0; j < m.cell_count(); ++j)
    acc += m.cell_mass(j) / vol * cube_integral(m.cell_center(j).data(), n, m.side(), y.data(), beta, 8);
  return acc;
}

}  // namespace wolffkit
