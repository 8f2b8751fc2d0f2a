#include "patchmg/nonlinear.hpp"

#include <cmath>

namespace patchmg {

namespace {

ConstraintSet constraints_of(const SpaceRef& space, const std::vector<DirichletBC>& bcs) {
  if (std::holds_alternative<const FunctionSpace*>(space))
    return ConstraintSet::build(*std::get<const FunctionSpace*>(space), bcs);
  return ConstraintSet::build(*std::get<const MixedSpace*>(space), bcs);
}

void impose_dirichlet(const ConstraintSet& cs, Vector& u) {
  for (size_t k = 0; k < cs.dofs.size(); ++k) u[cs.dofs[k]] = cs.values[k];
}

}  // namespace

SolveReport newton(const FormDescriptor& form, const SpaceRef& space,
                   const std::vector<DirichletBC>& bcs, Vector& u, NewtonOptions opts) {
  SolveReport rep;
  ConstraintSet cs = constraints_of(space, bcs);
  impose_dirichlet(cs, u);

  Vector f = residual(form, space, u, cs);
  double f0 = norm2(f);
  rep.residual_history.push_back(f0);
  double target = std::max(opts.rtol * f0, opts.atol);
  if (f0 <= target) {
    rep.converged = true;
    return rep;
  }

  int growth_streak = 0;
  for (int it = 1; it <= opts.maxit; ++it) {
    SparseMatrix jac = assemble_global(form, space, bcs, &u).matrix;
    Vector step;
    if (opts.inner) {
      step = opts.inner(jac, f);
    } else {
      step = LuFactors::factor(DenseMatrix::from_sparse(jac)).solve(f);
    }
    axpy(-1.0, step, u);

    f = residual(form, space, u, cs);
    double fn = norm2(f);
    rep.residual_history.push_back(fn);
    rep.iterations = it;
    if (fn <= target) {
      rep.converged = true;
      break;
    }
    growth_streak = fn > rep.residual_history[it - 1] ? growth_streak + 1 : 0;
    if (growth_streak >= 3) {
      rep.diverged = true;
      break;
    }
  }
  rep.final_relative_residual = rep.residual_history.back() / f0;
  return rep;
}

SolveReport nonlinear_relaxation_solve(const FormDescriptor& form, const SpaceRef& space,
                                       const std::vector<DirichletBC>& bcs,
                                       const PatchSmoother& smoother, Vector& u,
                                       RelaxationOptions opts) {
  SolveReport rep;
  ConstraintSet cs = constraints_of(space, bcs);
  impose_dirichlet(cs, u);

  double f0 = norm2(residual(form, space, u, cs));
  rep.residual_history.push_back(f0);
  double target = std::max(opts.rtol * f0, opts.atol);
  if (f0 <= target) {
    rep.converged = true;
    return rep;
  }

  int non_monotone = 0;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    smoother.apply_nonlinear(form, u);
    double fn = norm2(residual(form, space, u, cs));
    rep.residual_history.push_back(fn);
    rep.iterations = sweep;
    if (fn <= target) {
      rep.converged = true;
      break;
    }
    non_monotone = fn >= rep.residual_history[sweep - 1] ? non_monotone + 1 : 0;
    if (non_monotone >= 10) {
      rep.diverged = true;
      break;
    }
  }
  rep.final_relative_residual = rep.residual_history.back() / f0;
  return rep;
}

}  // namespace patchmg
