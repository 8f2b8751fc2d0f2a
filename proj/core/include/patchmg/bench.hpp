#pragma once

#include <string>

#include "patchmg/krylov.hpp"
#include "patchmg/multigrid.hpp"
#include "patchmg/nonlinear.hpp"

namespace patchmg {

enum class Problem { riesz_hdiv, riesz_hcurl, elasticity, stokes, allen_cahn, poisson };
enum class KspType { cg, gmres, richardson };

/// One experiment: a problem family swept over refinement levels (rows) and a
/// parameter (columns), solved with a fixed solver composition.
struct BenchSpec {
  Problem problem = Problem::poisson;
  int base_nx = 8, base_ny = 8;
  CellShape cell = CellShape::triangle;
  std::vector<int> refinements = {1, 2, 3};
  std::vector<double> params = {1.0};
  int degree = 1;
  SmootherConfig smoother;
  CycleConfig cycle;
  KspType ksp = KspType::cg;
  double rtol = 1e-10;
  int maxit = 200;
  double richardson_scale = 1.0;

  /// Problem defaults (solver shape, smoother, rhs conventions); CLI flags
  /// override individual fields afterwards.
  static BenchSpec defaults(Problem p);
};

struct ResultTable {
  std::vector<std::string> col_labels;                // parameter values
  std::vector<std::string> row_labels;                // refinement levels
  std::vector<int> dofs;                              // per row
  std::vector<std::vector<std::string>> cells;        // iterations or ">maxit"
  std::vector<std::vector<double>> true_residuals;    // ‖b−Ax‖/‖b‖ per cell

  std::string to_csv() const;
  std::string to_markdown() const;
};

ResultTable run(const BenchSpec& spec);

struct DiagnoseReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int overlap = 0;       // N_O of the patch decomposition
  bool bound_satisfied = false;
  int dofs = 0;

  std::string to_string() const;
};

/// Spectral diagnostics of the smoothed operator on the finest level of
/// refinements[0]: Lanczos extremes of prec·A restricted to the free dofs,
/// checked against the patch overlap count.
DiagnoseReport diagnose(const BenchSpec& spec);

}  // namespace patchmg
