#include "patchmg/multigrid.hpp"

#include <cmath>
#include <stdexcept>

#include "patchmg/cellmap.hpp"

namespace patchmg {

namespace {

using Triplet = std::tuple<int, int, double>;

// Nodal interpolation: evaluate the coarse basis at every fine node point.
void prolong_nodal(const FunctionSpace& cs, const FunctionSpace& fs,
                   const RefinementMap& map, int row_off, int col_off,
                   std::vector<Triplet>& trips) {
  const PlexTopology& ftopo = *fs.topology;
  const int comps = fs.element.components;
  const int nbf = fs.element.n_basis;
  const int nbc = cs.element.n_basis;
  const int vs = cs.element.value_size;
  std::vector<char> done(fs.total_dofs(), 0);

  for (PointId fc = 0; fc < ftopo.num_cells(); ++fc) {
    PointId cc = map.parent[fc];
    CellMap fmap = CellMap::from(ftopo, *fs.geometry, fc);
    CellMap cmap = CellMap::from(*cs.topology, *cs.geometry, cc);

    std::vector<int> pending;  // local fine dofs still needing a row
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i < nbf; ++i) {
      int g = fs.cell_dofs[fc][i].first;
      if (done[g]) continue;
      done[g] = 1;
      pending.push_back(i);
      auto node = fs.element.nodes[i / comps];
      auto phys = fmap.to_physical(node[0], node[1]);
      pts.push_back(cmap.to_reference(phys));
    }
    if (pending.empty()) continue;

    std::vector<double> tab = cs.element.tabulate(pts, 0);
    for (size_t q = 0; q < pending.size(); ++q) {
      int i = pending[q];
      int g = fs.cell_dofs[fc][i].first;
      int comp = i % comps;
      for (int j = 0; j < nbc; ++j) {
        double val = tab[(q * nbc + j) * vs + comp];
        if (std::abs(val) > 1e-12)
          trips.emplace_back(g + row_off, cs.cell_dofs[cc][j].first + col_off, val);
      }
    }
  }
}

// Edge-functional interpolation: apply each fine edge's flux (RT0) or
// circulation (Ned0) functional to the coarse basis, via the parent cell of a
// supporting fine cell.
void prolong_edge_functionals(const FunctionSpace& cs, const FunctionSpace& fs,
                              const RefinementMap& map, int row_off, int col_off,
                              std::vector<Triplet>& trips) {
  const PlexTopology& ftopo = *fs.topology;
  const bool flux = cs.element.mapping == MappingKind::contravariant_piola;
  const int nbc = cs.element.n_basis;
  Stratum fedges = ftopo.entities(1);
  Stratum fverts = ftopo.entities(0);

  std::vector<double> qs, qw;
  gauss_legendre_01(2, qs, qw);

  for (PointId e = fedges.begin; e < fedges.end; ++e) {
    int g = fs.section.offset[e];
    if (fs.section.count[e] == 0) continue;
    PointId fc = ftopo.support(e)[0];
    PointId cc = map.parent[fc];
    CellMap cmap = CellMap::from(*cs.topology, *cs.geometry, cc);

    const auto& cone = ftopo.cone(e);  // endpoints, low -> high vertex id
    auto a = fs.geometry->coordinates[cone[0] - fverts.begin];
    auto b = fs.geometry->coordinates[cone[1] - fverts.begin];
    double dx = b[0] - a[0], dy = b[1] - a[1];

    std::vector<double> vals(nbc, 0.0);
    for (size_t q = 0; q < qs.size(); ++q) {
      std::array<double, 2> phys = {a[0] + qs[q] * dx, a[1] + qs[q] * dy};
      auto ref = cmap.to_reference(phys);
      auto jac = cmap.jacobian(ref[0], ref[1]);
      double dj = det2(jac);
      std::vector<double> tab = cs.element.tabulate({ref}, 0);
      for (int j = 0; j < nbc; ++j) {
        double ux = tab[j * 2], uy = tab[j * 2 + 1];
        double px, py;
        if (flux) {
          px = (jac[0][0] * ux + jac[0][1] * uy) / dj;
          py = (jac[1][0] * ux + jac[1][1] * uy) / dj;
        } else {
          auto ji = inv2(jac);  // J^{-T} u
          px = ji[0][0] * ux + ji[1][0] * uy;
          py = ji[0][1] * ux + ji[1][1] * uy;
        }
        vals[j] += qw[q] * (flux ? px * dy - py * dx : px * dx + py * dy);
      }
    }
    for (int j = 0; j < nbc; ++j) {
      auto [gc, sc] = cs.cell_dofs[cc][j];
      if (std::abs(vals[j]) > 1e-10)
        trips.emplace_back(g + row_off, gc + col_off, sc * vals[j]);
    }
  }
}

void prolong_block(const FunctionSpace& cs, const FunctionSpace& fs,
                   const RefinementMap& map, int row_off, int col_off,
                   std::vector<Triplet>& trips) {
  if (cs.element.family != fs.element.family || cs.element.degree != fs.element.degree)
    throw std::invalid_argument("build_prolongation: element mismatch between levels");
  if (cs.element.family == ElementFamily::lagrange)
    prolong_nodal(cs, fs, map, row_off, col_off, trips);
  else
    prolong_edge_functionals(cs, fs, map, row_off, col_off, trips);
}

std::vector<const FunctionSpace*> space_list(const SpaceRef& s) {
  std::vector<const FunctionSpace*> out;
  if (std::holds_alternative<const FunctionSpace*>(s)) {
    out.push_back(std::get<const FunctionSpace*>(s));
  } else {
    for (const auto& sub : std::get<const MixedSpace*>(s)->subspaces) out.push_back(&sub);
  }
  return out;
}

std::vector<int> block_offsets(const SpaceRef& s) {
  if (std::holds_alternative<const FunctionSpace*>(s)) return {0};
  return std::get<const MixedSpace*>(s)->block_offsets;
}

}  // namespace

TransferOperator build_prolongation(const SpaceRef& coarse, const SpaceRef& fine,
                                    const RefinementMap& map) {
  auto cspaces = space_list(coarse);
  auto fspaces = space_list(fine);
  if (cspaces.size() != fspaces.size())
    throw std::invalid_argument("build_prolongation: mixed-space block count mismatch");
  auto coffs = block_offsets(coarse);
  auto foffs = block_offsets(fine);

  std::vector<Triplet> trips;
  for (size_t s = 0; s < cspaces.size(); ++s)
    prolong_block(*cspaces[s], *fspaces[s], map, foffs[s], coffs[s], trips);

  return {SparseMatrix::from_triplets(total_dofs(fine), total_dofs(coarse),
                                      std::move(trips))};
}

void chebyshev_smooth(const SparseMatrix& op, const LinearOperator& prec,
                      std::span<const double> b, Vector& x, int order,
                      std::array<double, 2> bounds) {
  auto [lo, hi] = bounds;
  if (!(lo > 0.0) || lo > hi) throw std::invalid_argument("chebyshev_smooth: invalid bounds");
  const double d = 0.5 * (hi + lo);
  const double c = 0.5 * (hi - lo);

  Vector r = op.apply(x);
  for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];

  Vector p;
  double alpha = 0.0;
  for (int k = 0; k < order; ++k) {
    Vector z = prec(r);
    if (k == 0) {
      p = std::move(z);
      alpha = 1.0 / d;
    } else {
      double beta = 0.5 * c * alpha;
      beta = beta * beta;
      if (k == 1) beta *= 2.0;
      alpha = 1.0 / (d - beta / alpha);
      for (size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    axpy(alpha, p, x);
    Vector ap = op.apply(p);
    axpy(-alpha, ap, r);
  }
}

MgHierarchy MgHierarchy::build(const FormDescriptor& form, std::vector<SpaceRef> spaces,
                               std::vector<const RefinementMap*> maps,
                               const std::vector<DirichletBC>& bcs,
                               const SmootherConfig& smoother_config, CycleConfig cycle,
                               const std::function<Vector(const SpaceRef&)>& nullspace_of) {
  if (spaces.empty()) throw std::invalid_argument("MgHierarchy: no levels");
  if (maps.size() + 1 != spaces.size())
    throw std::invalid_argument("MgHierarchy: need one refinement map per level pair");

  MgHierarchy h;
  h.config_ = cycle;
  h.levels_.resize(spaces.size());
  for (size_t l = 0; l < spaces.size(); ++l) {
    Level& lev = h.levels_[l];
    lev.space = spaces[l];
    lev.system = assemble_global(form, spaces[l], bcs);
    if (nullspace_of) {
      lev.nullspace = nullspace_of(spaces[l]);
      double nn = norm2(lev.nullspace);
      if (nn > 0) scale(1.0 / nn, lev.nullspace);
    }
    lev.smoother = PatchSmoother::build(spaces[l], lev.system.constraints, smoother_config);
    lev.smoother.assemble(form, nullptr,
                          lev.nullspace.empty() ? nullptr : &lev.nullspace);
    if (l > 0) lev.prolongation = build_prolongation(spaces[l - 1], spaces[l], *maps[l - 1]).P;
  }

  // Coarse dense factorization, nullspace-shifted when singular.
  DenseMatrix coarse = DenseMatrix::from_sparse(h.levels_[0].system.matrix);
  if (!h.levels_[0].nullspace.empty()) {
    const Vector& z = h.levels_[0].nullspace;
    for (int i = 0; i < coarse.rows(); ++i)
      for (int j = 0; j < coarse.cols(); ++j) coarse(i, j) += z[i] * z[j];
  }
  h.coarse_lu_ = LuFactors::factor(coarse);

  // Chebyshev spectrum estimates on the smoothed operator per level.
  if (cycle.accel == LevelAccel::chebyshev) {
    for (size_t l = 1; l < h.levels_.size(); ++l) {
      Level& lev = h.levels_[l];
      lev.cheby_bounds = cycle.cheby_bounds;
      if (lev.cheby_bounds[0] > 0 && lev.cheby_bounds[0] <= lev.cheby_bounds[1]) continue;
      const SparseMatrix& a = lev.system.matrix;
      const PatchSmoother& sm = lev.smoother;
      const bool mult = smoother_config.local_type == LocalSolveType::multiplicative;
      LinearOperator pa = [&a, &sm, mult](std::span<const double> v) {
        Vector av = a.apply(v);
        if (!mult) return sm.apply_additive(av);
        Vector x(av.size(), 0.0);
        sm.apply_multiplicative(av, x);
        return x;
      };
      double top = arnoldi_extremes(pa, a.rows(), 10).max_real;
      if (!(top > 0)) top = 1.0;
      lev.cheby_bounds = {0.1 * top, 1.1 * top};
    }
  }
  return h;
}

LinearOperator MgHierarchy::preconditioner() const {
  return [this](std::span<const double> b) { return apply(b); };
}

Vector MgHierarchy::apply(std::span<const double> b) const {
  Vector x(b.size(), 0.0);
  cycle(b, x);
  return x;
}

void MgHierarchy::cycle(std::span<const double> b, Vector& x) const {
  run_level(num_levels() - 1, b, x, config_.cycle == CycleConfig::Cycle::F);
  // Eliminated rows are identity rows; solve them exactly.
  const ConstraintSet& cs = levels_.back().system.constraints;
  for (int d : cs.dofs) x[d] = b[d];
}

void MgHierarchy::run_level(int l, std::span<const double> b, Vector& x, bool f_cycle) const {
  const Level& lev = levels_[l];
  if (l == 0) {
    if (lev.nullspace.empty()) {
      x = coarse_lu_.solve(b);
    } else {
      Vector bb(b.begin(), b.end());
      axpy(-dot(lev.nullspace, bb), lev.nullspace, bb);
      x = coarse_lu_.solve(bb);
      axpy(-dot(lev.nullspace, x), lev.nullspace, x);
    }
    return;
  }

  if (f_cycle) {
    // coarse-grid solution first, prolonged as the initial guess
    Vector r = lev.system.matrix.apply(x);
    for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    Vector rc = restrict_residual(l, r);
    Vector ec(rc.size(), 0.0);
    run_level(l - 1, rc, ec, true);
    prolong_add(l, ec, x);
  }

  smooth(l, b, x, config_.pre_smooth);

  Vector r = lev.system.matrix.apply(x);
  for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  Vector rc = restrict_residual(l, r);
  Vector ec(rc.size(), 0.0);
  run_level(l - 1, rc, ec, false);
  prolong_add(l, ec, x);

  smooth(l, b, x, config_.post_smooth);
}

void MgHierarchy::smooth(int l, std::span<const double> b, Vector& x, int sweeps) const {
  const Level& lev = levels_[l];
  const SparseMatrix& a = lev.system.matrix;
  const PatchSmoother& sm = lev.smoother;
  const bool mult = sm.config().local_type == LocalSolveType::multiplicative;

  if (config_.accel == LevelAccel::chebyshev) {
    LinearOperator prec = [&sm, mult](std::span<const double> r) {
      if (!mult) return sm.apply_additive(r);
      Vector rr(r.begin(), r.end()), z(r.size(), 0.0);
      sm.apply_multiplicative(rr, z);
      return z;
    };
    for (int s = 0; s < sweeps; ++s)
      chebyshev_smooth(a, prec, b, x, config_.cheby_order, lev.cheby_bounds);
    return;
  }

  Vector r = a.apply(x);
  for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  for (int s = 0; s < sweeps; ++s) {
    if (mult) {
      sm.apply_multiplicative(r, x);  // keeps r consistent
    } else {
      Vector d = sm.apply_additive(r);
      axpy(config_.richardson_scale, d, x);
      if (s + 1 < sweeps) {
        r = a.apply(x);
        for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
      }
    }
  }
}

Vector MgHierarchy::restrict_residual(int l, std::span<const double> r) const {
  const Level& lev = levels_[l];
  const SparseMatrix& p = lev.prolongation;
  const ConstraintSet& fine_cs = lev.system.constraints;
  const ConstraintSet& coarse_cs = levels_[l - 1].system.constraints;

  Vector rc(p.cols(), 0.0);
  auto offs = p.row_offsets();
  auto cols = p.col_indices();
  auto vals = p.values();
  for (int row = 0; row < p.rows(); ++row) {
    if (fine_cs.constrained(row)) continue;
    double v = r[row];
    for (int k = offs[row]; k < offs[row + 1]; ++k) rc[cols[k]] += vals[k] * v;
  }
  for (int d = 0; d < p.cols(); ++d)
    if (coarse_cs.constrained(d)) rc[d] = 0.0;
  return rc;
}

void MgHierarchy::prolong_add(int l, std::span<const double> ec, Vector& x) const {
  const Level& lev = levels_[l];
  const SparseMatrix& p = lev.prolongation;
  const ConstraintSet& fine_cs = lev.system.constraints;
  auto offs = p.row_offsets();
  auto cols = p.col_indices();
  auto vals = p.values();
  for (int row = 0; row < p.rows(); ++row) {
    if (fine_cs.constrained(row)) continue;
    double acc = 0.0;
    for (int k = offs[row]; k < offs[row + 1]; ++k) acc += vals[k] * ec[cols[k]];
    x[row] += acc;
  }
}

}  // namespace patchmg
