#pragma once

#include <functional>
#include <optional>
#include <set>

#include "patchmg/forms.hpp"

namespace patchmg {

enum class ConstructType { star, vanka, pardecomp, custom };
enum class LocalSolveType { additive, multiplicative };
enum class WeightingKind { none, constant, partition_of_unity };

struct SmootherConfig {
  ConstructType construct_type = ConstructType::star;
  /// Entity dimension to iterate for the patch seeds.
  int construct_dim = 0;
  LocalSolveType local_type = LocalSolveType::additive;
  WeightingKind weighting = WeightingKind::none;
  double constant_scale = 1.0;
  std::set<int> exclude_subspaces;
  /// Cache explicit local inverses (applied by matvec) instead of LU solves.
  bool dense_inverse = true;
  /// custom construction: update entities per seed.
  std::function<std::vector<PointId>(const PlexTopology&, PointId)> custom;

  // local Newton controls (nonlinear sweeps)
  int local_newton_maxit = 20;
  double local_newton_atol = 1e-12;
  double local_newton_rtol = 1e-10;
};

struct PatchDefinition {
  PointId seed = -1;
  std::vector<PointId> update_entities;
  std::vector<PointId> completed_entities;
  std::vector<PointId> cells;
};

struct PatchNumbering {
  Numbering interior;       // dofs updated by the local solve
  Numbering with_boundary;  // dofs whose residual entries change (multiplicative)
  Numbering state;          // all dofs on the completed patch (nonlinear)
};

/// Patch list with cached dense local factorizations; applies the additive,
/// multiplicative and nonlinear subspace-correction sweeps.
class PatchSmoother {
public:
  static PatchSmoother build(const SpaceRef& space, const ConstraintSet& constraints,
                             SmootherConfig config);

  /// Assemble and cache the local operators. `state` linearizes nonlinear
  /// forms; `nullspace` regularizes whole-domain patch solves of singular
  /// operators.
  void assemble(const FormDescriptor& form, const Vector* state = nullptr,
                const Vector* nullspace = nullptr);

  /// delta = sum_i w_i I_i A_i^{-1} I_i^* r  (patches in ascending seed order)
  Vector apply_additive(std::span<const double> r) const;

  /// Sequential sweep; x and r updated in place, r stays consistent with
  /// b - A x via the extended with_boundary blocks.
  void apply_multiplicative(std::span<double> r, std::span<double> x) const;

  struct NonlinearReport {
    int flagged_patches = 0;
  };
  /// One parallel nonlinear sweep: per-patch Newton on the local problem,
  /// updates combined additively with the configured weights.
  NonlinearReport apply_nonlinear(const FormDescriptor& form, Vector& u) const;

  /// Per-dof combination weights implied by the weighting config.
  const Vector& weights() const { return weights_; }

  /// Maximal number of patches whose cells overlap any one patch's cells
  /// (the interaction count governing the additive spectral bound).
  int overlap_bound() const;

  const SmootherConfig& config() const { return config_; }
  const std::vector<PatchDefinition>& patches() const { return patches_; }
  const std::vector<PatchNumbering>& numberings() const { return numberings_; }
  int dropped_patches() const { return dropped_; }
  int total_dofs() const { return ndofs_; }

private:
  struct LocalOps {
    std::optional<LuFactors> lu;
    std::optional<DenseMatrix> inverse;
    DenseMatrix extended;  // with_boundary x interior (multiplicative only)
    Vector solve(std::span<const double> b) const;
  };

  SpaceRef space_{static_cast<const FunctionSpace*>(nullptr)};
  const ConstraintSet* constraints_ = nullptr;
  SmootherConfig config_;
  int ndofs_ = 0;
  int dropped_ = 0;
  std::vector<PatchDefinition> patches_;
  std::vector<PatchNumbering> numberings_;
  std::vector<LocalOps> ops_;
  Vector weights_;
  bool assembled_ = false;
};

}  // namespace patchmg
