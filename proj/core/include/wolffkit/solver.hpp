#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wolffkit/kappa_table.hpp"
#include "wolffkit/measure.hpp"
#include "wolffkit/params.hpp"
#include "wolffkit/potentials.hpp"

namespace wolffkit {

struct SolverOptions {
  double tol = 1e-8;
  int max_iters = 500;
  double overflow = 1e300;
  std::size_t max_cached_pairs = 60'000'000;
};

struct SolveReport {
  Field u;  // at the cell centers of the measure, in cell order
  int iterations = 0;
  double residual = 0.0;
  SolveStatus status = SolveStatus::TrivialOnly;
  double bracket_min = 0.0;  // min and max of T(u)/u at the returned iterate
  double bracket_max = 0.0;
  std::vector<double> residual_history;
  std::string message;
};

// T(u) = W_{alpha,p}(u^q sigma) on the cell centers of sigma, where u is one
// value per cell. The geometry is cached across applications.
class SublinearOperator {
 public:
  SublinearOperator(const GridMeasure& m, const Params& prm, std::size_t max_cached_pairs = 60'000'000);
  const GridMeasure& measure() const { return *m_; }
  const Params& params() const { return prm_; }
  std::vector<double> apply(std::span<const double> u) const;
  // W sigma at the cell centers.
  std::vector<double> wolff_of_sigma() const;

 private:
  const GridMeasure* m_;
  Params prm_;
  std::unique_ptr<WolffPlan> plan_;
};

Field apply_T(const GridMeasure& m, const Params& prm, const Field& u);

// Minimal positive solution of u = W(u^q sigma) + 0 by monotone iteration from a
// subsolution proportional to (W sigma)^{(p-1)/(p-1-q)}.
SolveReport solve_minimal(const GridMeasure& m, const Params& prm, const SolverOptions& opt = {});
// Monotone iteration downward from a supersolution.
SolveReport solve_from_above(const GridMeasure& m, const Params& prm, std::span<const double> start,
                             const SolverOptions& opt = {});

// u extended to arbitrary points by one application of T.
Field extend_solution(const GridMeasure& m, const Params& prm, const SolveReport& rep, std::span<const double> points);

struct TwoSidedReport {
  std::vector<double> ratios;  // u / ((W sigma)^{(p-1)/(p-1-q)} + K sigma)
  double min = 0.0;
  double max = 0.0;
  double spread = 0.0;  // max / min
};

// probes must have ball series in kt.
TwoSidedReport verify_two_sided(const SolveReport& rep, const GridMeasure& m, const Params& prm, const KappaTable& kt,
                                std::span<const double> probes);

}  // namespace wolffkit
