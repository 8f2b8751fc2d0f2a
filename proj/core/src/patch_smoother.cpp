#include "patchmg/patch_smoother.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace patchmg {

namespace {

struct SubView {
  const FunctionSpace* fs;
  int offset;
};

std::vector<SubView> sub_views(const SpaceRef& space) {
  std::vector<SubView> v;
  if (std::holds_alternative<const FunctionSpace*>(space)) {
    v.push_back({std::get<const FunctionSpace*>(space), 0});
  } else {
    const MixedSpace* m = std::get<const MixedSpace*>(space);
    for (size_t s = 0; s < m->subspaces.size(); ++s)
      v.push_back({&m->subspaces[s], m->block_offsets[s]});
  }
  return v;
}

const PlexTopology& topology_of(const SpaceRef& space) {
  return *sub_views(space)[0].fs->topology;
}

std::vector<int> dofs_on(const std::vector<SubView>& views,
                         const std::vector<PointId>& points,
                         const std::set<int>& exclude, PointId seed) {
  std::vector<int> dofs;
  for (size_t s = 0; s < views.size(); ++s) {
    const bool excluded = exclude.count(static_cast<int>(s)) > 0;
    std::vector<int> sub = excluded ? views[s].fs->dofs_on_points({seed})
                                    : views[s].fs->dofs_on_points(points);
    for (int d : sub) dofs.push_back(d + views[s].offset);
  }
  return dofs;
}

std::vector<int> remove_constrained(std::vector<int> dofs, const ConstraintSet& cs) {
  dofs.erase(std::remove_if(dofs.begin(), dofs.end(),
                            [&](int d) { return cs.constrained(d); }),
             dofs.end());
  return dofs;
}

std::vector<PointId> cells_of(const PlexTopology& topo, const std::vector<PointId>& points) {
  Stratum s = topo.stratum(2);
  std::vector<PointId> cells;
  for (PointId p : points)
    if (s.contains(p)) cells.push_back(p);
  return cells;
}

}  // namespace

PatchSmoother PatchSmoother::build(const SpaceRef& space, const ConstraintSet& constraints,
                                   SmootherConfig config) {
  PatchSmoother sm;
  sm.space_ = space;
  sm.constraints_ = &constraints;
  sm.config_ = std::move(config);
  sm.ndofs_ = patchmg::total_dofs(space);

  const PlexTopology& topo = topology_of(space);
  auto views = sub_views(space);
  const SmootherConfig& cfg = sm.config_;

  std::vector<PointId> seeds;
  if (cfg.construct_type == ConstructType::pardecomp) {
    seeds.push_back(-1);
  } else {
    Stratum s = topo.stratum(cfg.construct_dim);
    for (PointId p = s.begin; p < s.end; ++p) seeds.push_back(p);
  }

  for (PointId seed : seeds) {
    PatchDefinition def;
    def.seed = seed;
    switch (cfg.construct_type) {
      case ConstructType::star:
        def.update_entities = topo.star({seed});
        def.cells = cells_of(topo, def.update_entities);
        break;
      case ConstructType::vanka:
        // Updated dofs live on the whole closure of the star, so their
        // equations need every cell supporting them; otherwise the local
        // operator is a pure-Neumann restriction and can be singular.
        def.update_entities = topo.closure(topo.star({seed}));
        def.cells = cells_of(topo, topo.star(def.update_entities));
        break;
      case ConstructType::pardecomp: {
        def.update_entities.resize(topo.num_points());
        for (int p = 0; p < topo.num_points(); ++p) def.update_entities[p] = p;
        def.cells = cells_of(topo, def.update_entities);
        break;
      }
      case ConstructType::custom:
        if (!cfg.custom) throw std::invalid_argument("custom construct type needs a callback");
        def.update_entities = cfg.custom(topo, seed);
        def.cells = cells_of(topo, topo.star(def.update_entities));
        break;
    }
    def.completed_entities = topo.closure(def.cells);

    PatchNumbering num;
    std::vector<int> interior = remove_constrained(
        dofs_on(views, def.update_entities, cfg.exclude_subspaces, seed), constraints);
    if (interior.empty()) {
      ++sm.dropped_;
      continue;
    }
    num.interior = Numbering::of(std::move(interior));
    num.with_boundary = Numbering::of(
        remove_constrained(dofs_on(views, def.completed_entities, {}, seed), constraints));
    num.state = Numbering::of(dofs_on(views, def.completed_entities, {}, seed));
    sm.patches_.push_back(std::move(def));
    sm.numberings_.push_back(std::move(num));
  }

  // Combination weights.
  sm.weights_.assign(sm.ndofs_, 1.0);
  if (cfg.weighting == WeightingKind::constant) {
    sm.weights_.assign(sm.ndofs_, cfg.constant_scale);
  } else if (cfg.weighting == WeightingKind::partition_of_unity) {
    std::vector<int> count(sm.ndofs_, 0);
    for (const auto& num : sm.numberings_)
      for (int g : num.interior.global) count[g]++;
    for (int d = 0; d < sm.ndofs_; ++d)
      if (count[d] > 0) sm.weights_[d] = 1.0 / count[d];
  }
  return sm;
}

void PatchSmoother::assemble(const FormDescriptor& form, const Vector* state,
                             const Vector* nullspace) {
  ops_.assign(patches_.size(), {});
  const bool multiplicative = config_.local_type == LocalSolveType::multiplicative;

  StateAccessor acc;
  if (state) acc = [state](int g) { return (*state)[g]; };

  int free_dofs = ndofs_ - static_cast<int>(constraints_->dofs.size());

  for (size_t p = 0; p < patches_.size(); ++p) {
    const auto& num = numberings_[p];
    DenseMatrix local;
    if (multiplicative) {
      LocalSystem ls = assemble_cells(form, space_, patches_[p].cells, num.with_boundary,
                                      num.interior, acc);
      ops_[p].extended = ls.matrix;
      local = DenseMatrix(num.interior.size(), num.interior.size());
      for (int i = 0; i < num.interior.size(); ++i) {
        int wi = num.with_boundary.local_of(num.interior.global[i]);
        for (int j = 0; j < num.interior.size(); ++j) local(i, j) = ls.matrix(wi, j);
      }
    } else {
      local = assemble_cells(form, space_, patches_[p].cells, num.interior, num.interior,
                             acc).matrix;
    }

    if (nullspace && num.interior.size() >= free_dofs) {
      // Whole-domain patch of a singular operator: shift by the rank-one
      // nullspace term so the LU is well posed on the orthogonal complement.
      Vector z(num.interior.size());
      for (int i = 0; i < num.interior.size(); ++i)
        z[i] = (*nullspace)[num.interior.global[i]];
      double nz = norm2(z);
      if (nz > 0) {
        scale(1.0 / nz, z);
        for (int i = 0; i < num.interior.size(); ++i)
          for (int j = 0; j < num.interior.size(); ++j) local(i, j) += z[i] * z[j];
      }
    }

    try {
      if (config_.dense_inverse)
        ops_[p].inverse = invert(local);
      else
        ops_[p].lu = LuFactors::factor(local);
    } catch (const SingularMatrixError&) {
      throw SingularMatrixError("patch local matrix singular at seed entity " +
                                std::to_string(patches_[p].seed));
    }
  }
  assembled_ = true;
}

Vector PatchSmoother::LocalOps::solve(std::span<const double> b) const {
  if (inverse) return inverse->apply(b);
  return lu->solve(b);
}

Vector PatchSmoother::apply_additive(std::span<const double> r) const {
  if (!assembled_) throw std::logic_error("apply_additive: smoother not assembled");
  Vector delta(ndofs_, 0.0);
  Vector rloc;
  for (size_t p = 0; p < patches_.size(); ++p) {
    const auto& interior = numberings_[p].interior;
    rloc.resize(interior.size());
    for (int i = 0; i < interior.size(); ++i) rloc[i] = r[interior.global[i]];
    Vector sol = ops_[p].solve(rloc);
    for (int i = 0; i < interior.size(); ++i) {
      int g = interior.global[i];
      delta[g] += weights_[g] * sol[i];
    }
  }
  return delta;
}

void PatchSmoother::apply_multiplicative(std::span<double> r, std::span<double> x) const {
  if (!assembled_) throw std::logic_error("apply_multiplicative: smoother not assembled");
  if (config_.local_type != LocalSolveType::multiplicative)
    throw std::logic_error("apply_multiplicative: smoother built additive");
  Vector rloc, upd;
  for (size_t p = 0; p < patches_.size(); ++p) {
    const auto& num = numberings_[p];
    rloc.resize(num.interior.size());
    for (int i = 0; i < num.interior.size(); ++i) rloc[i] = r[num.interior.global[i]];
    Vector sol = ops_[p].solve(rloc);
    for (int i = 0; i < num.interior.size(); ++i) x[num.interior.global[i]] += sol[i];
    // residual update restricted to the with_boundary dofs
    upd = ops_[p].extended.apply(sol);
    for (int i = 0; i < num.with_boundary.size(); ++i)
      r[num.with_boundary.global[i]] -= upd[i];
  }
}

PatchSmoother::NonlinearReport PatchSmoother::apply_nonlinear(const FormDescriptor& form,
                                                              Vector& u) const {
  if (!form.nonlinear()) throw std::invalid_argument("apply_nonlinear: form is linear");
  NonlinearReport report;
  Vector combined = u;
  Vector local_state;

  for (size_t p = 0; p < patches_.size(); ++p) {
    const auto& num = numberings_[p];
    const auto& def = patches_[p];

    local_state.resize(num.state.size());
    for (int i = 0; i < num.state.size(); ++i) local_state[i] = u[num.state.global[i]];
    StateAccessor acc = [&](int g) { return local_state[num.state.local.at(g)]; };

    bool converged = false;
    double r0 = -1.0;
    for (int it = 0; it < config_.local_newton_maxit; ++it) {
      LocalSystem ls =
          assemble_cells(form, space_, def.cells, num.interior, num.interior, acc);
      double rn = norm2(ls.residual);
      if (r0 < 0) r0 = rn;
      if (rn <= std::max(config_.local_newton_atol, config_.local_newton_rtol * r0)) {
        converged = true;
        break;
      }
      Vector step;
      try {
        step = LuFactors::factor(ls.matrix).solve(ls.residual);
      } catch (const SingularMatrixError&) {
        break;
      }
      for (int i = 0; i < num.interior.size(); ++i)
        local_state[num.state.local.at(num.interior.global[i])] -= step[i];
    }
    if (!converged) {
      ++report.flagged_patches;
      continue;
    }
    for (int i = 0; i < num.interior.size(); ++i) {
      int g = num.interior.global[i];
      combined[g] += weights_[g] * (local_state[num.state.local.at(g)] - u[g]);
    }
  }
  u = std::move(combined);
  return report;
}

int PatchSmoother::overlap_bound() const {
  // Two subspaces interact when their patches share a cell (their basis
  // functions then overlap, so they are generically not A-orthogonal); the
  // additive spectral bound is governed by the maximal interaction count.
  std::map<PointId, std::vector<int>> cell_patches;
  for (size_t p = 0; p < patches_.size(); ++p)
    for (PointId c : patches_[p].cells) cell_patches[c].push_back(static_cast<int>(p));
  int best = 0;
  std::vector<char> seen(patches_.size());
  for (size_t p = 0; p < patches_.size(); ++p) {
    std::fill(seen.begin(), seen.end(), 0);
    int count = 0;
    for (PointId c : patches_[p].cells)
      for (int q : cell_patches.at(c))
        if (!seen[q]) {
          seen[q] = 1;
          ++count;
        }
    best = std::max(best, count);
  }
  return best;
}

}  // namespace patchmg
