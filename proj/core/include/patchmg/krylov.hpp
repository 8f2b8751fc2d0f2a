#pragma once

#include "patchmg/linalg.hpp"

namespace patchmg {

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  bool indefinite = false;  // CG: negative curvature encountered
  bool stagnated = false;   // GMRES: no reduction over a restart cycle
  bool diverged = false;    // Newton/relaxation: residual growth detected
  std::vector<double> residual_history;  // length iterations + 1
  double final_relative_residual = 0.0;
};

/// Orthonormal vectors to project out of right-hand sides and iterates.
struct Nullspace {
  std::vector<Vector> basis;

  static Nullspace of(std::vector<Vector> vectors);  // orthonormalizes
  void project(std::span<double> v) const;
  bool empty() const { return basis.empty(); }
};

/// Preconditioned conjugate gradients; convergence on the preconditioned
/// residual norm reduced by rtol.
SolveReport cg(const SparseMatrix& a, const LinearOperator& prec,
               std::span<const double> b, Vector& x, double rtol = 1e-10,
               int maxit = 1000);

/// Right-preconditioned restarted GMRES; convergence on the true residual
/// norm. Nullspace components are projected from b, every preconditioner
/// output, and the final iterate.
SolveReport gmres(const SparseMatrix& a, const LinearOperator& prec_right,
                  std::span<const double> b, Vector& x, double rtol = 1e-10,
                  int maxit = 1000, int restart = 100,
                  const Nullspace* nullspace = nullptr);

/// x <- x + scale * prec(b - A x); convergence on the true residual norm.
SolveReport richardson(const SparseMatrix& a, const LinearOperator& prec,
                       std::span<const double> b, Vector& x, double scale = 1.0,
                       double rtol = 1e-10, int maxit = 1000);

}  // namespace patchmg
