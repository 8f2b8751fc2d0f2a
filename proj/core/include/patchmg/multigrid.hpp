#pragma once

#include "patchmg/patch_smoother.hpp"

namespace patchmg {

/// Sparse prolongation mapping coarse dof vectors to fine dof vectors by
/// canonical interpolation (point evaluation for nodal elements, edge
/// flux/circulation functionals for the Piola-mapped families).
struct TransferOperator {
  SparseMatrix P;
};

TransferOperator build_prolongation(const SpaceRef& coarse, const SpaceRef& fine,
                                    const RefinementMap& map);

enum class LevelAccel { richardson, chebyshev };

struct CycleConfig {
  enum class Cycle { V, F };
  Cycle cycle = Cycle::V;
  int pre_smooth = 1;
  int post_smooth = 1;
  LevelAccel accel = LevelAccel::richardson;
  double richardson_scale = 1.0;
  int cheby_order = 2;
  /// (lo, hi); estimated via Lanczos on the smoothed operator when lo >= hi.
  std::array<double, 2> cheby_bounds = {0.0, 0.0};
};

/// Chebyshev polynomial iteration of the given order on the preconditioned
/// system, updating x in place. bounds = (lo, hi) bracket the spectrum of
/// prec applied to op.
void chebyshev_smooth(const SparseMatrix& op, const LinearOperator& prec,
                      std::span<const double> b, Vector& x, int order,
                      std::array<double, 2> bounds);

/// Geometric hierarchy with rediscretized per-level operators, patch smoothers
/// and a dense coarse solve. Immutable after build.
class MgHierarchy {
public:
  struct Level {
    SpaceRef space{static_cast<const FunctionSpace*>(nullptr)};
    AssembledSystem system;
    PatchSmoother smoother;
    SparseMatrix prolongation;  // from the next-coarser level; empty on level 0
    Vector nullspace;           // empty when the operator is regular
    std::array<double, 2> cheby_bounds = {0.0, 0.0};
  };

  /// spaces and maps are ordered coarse to fine; maps[i] refines spaces[i]
  /// into spaces[i+1]. `nullspace_of` supplies a per-level nullspace vector
  /// for singular operators (e.g. the constant-pressure mode).
  static MgHierarchy build(const FormDescriptor& form, std::vector<SpaceRef> spaces,
                           std::vector<const RefinementMap*> maps,
                           const std::vector<DirichletBC>& bcs,
                           const SmootherConfig& smoother_config, CycleConfig cycle,
                           const std::function<Vector(const SpaceRef&)>& nullspace_of = nullptr);

  int num_levels() const { return static_cast<int>(levels_.size()); }
  const Level& level(int l) const { return levels_[l]; }
  const AssembledSystem& fine_system() const { return levels_.back().system; }

  /// One cycle applied to b with zero initial guess (preconditioner form).
  Vector apply(std::span<const double> b) const;
  /// One cycle updating x in place.
  void cycle(std::span<const double> b, Vector& x) const;
  LinearOperator preconditioner() const;

private:
  void run_level(int l, std::span<const double> b, Vector& x, bool f_cycle) const;
  void smooth(int l, std::span<const double> b, Vector& x, int sweeps) const;
  Vector restrict_residual(int l, std::span<const double> r) const;
  void prolong_add(int l, std::span<const double> ec, Vector& x) const;

  std::vector<Level> levels_;
  CycleConfig config_;
  LuFactors coarse_lu_;
};

}  // namespace patchmg
