#pragma once

#include "patchmg/krylov.hpp"
#include "patchmg/multigrid.hpp"

namespace patchmg {

struct NewtonOptions {
  double rtol = 1e-8;
  double atol = 1e-12;
  int maxit = 50;
  /// Inner linear solve for the Newton step; dense LU when absent.
  std::function<Vector(const SparseMatrix&, const Vector&)> inner;
};

/// Full-step Newton on the discrete residual; u holds the initial guess and
/// is updated in place (Dirichlet values are imposed on entry).
SolveReport newton(const FormDescriptor& form, const SpaceRef& space,
                   const std::vector<DirichletBC>& bcs, Vector& u,
                   NewtonOptions opts = {});

struct RelaxationOptions {
  double rtol = 1e-8;
  double atol = 1e-12;
  int max_sweeps = 200;
};

/// Repeated nonlinear patch sweeps until the global residual norm is reduced
/// by rtol. The smoother must be built over the same space/constraints.
SolveReport nonlinear_relaxation_solve(const FormDescriptor& form, const SpaceRef& space,
                                       const std::vector<DirichletBC>& bcs,
                                       const PatchSmoother& smoother, Vector& u,
                                       RelaxationOptions opts = {});

}  // namespace patchmg
