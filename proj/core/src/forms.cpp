#include "patchmg/forms.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "patchmg/cellmap.hpp"

namespace patchmg {

CellMap CellMap::from(const PlexTopology& topo, const MeshGeometry& geom, PointId cell) {
  CellMap m;
  m.shape = topo.cell_shape();
  auto vs = topo.cell_vertices(cell);
  const int voff = topo.stratum(0).begin;
  for (size_t i = 0; i < vs.size(); ++i) m.v[i] = geom.coordinates[vs[i] - voff];
  return m;
}

std::array<double, 2> CellMap::to_physical(double x, double y) const {
  if (shape == CellShape::triangle)
    return {v[0][0] + x * (v[1][0] - v[0][0]) + y * (v[2][0] - v[0][0]),
            v[0][1] + x * (v[1][1] - v[0][1]) + y * (v[2][1] - v[0][1])};
  double s0 = (1 - x) * (1 - y), s1 = x * (1 - y), s2 = x * y, s3 = (1 - x) * y;
  return {s0 * v[0][0] + s1 * v[1][0] + s2 * v[2][0] + s3 * v[3][0],
          s0 * v[0][1] + s1 * v[1][1] + s2 * v[2][1] + s3 * v[3][1]};
}

std::array<std::array<double, 2>, 2> CellMap::jacobian(double x, double y) const {
  if (shape == CellShape::triangle)
    return {{{v[1][0] - v[0][0], v[2][0] - v[0][0]},
             {v[1][1] - v[0][1], v[2][1] - v[0][1]}}};
  // d/dx, d/dy of the bilinear map
  std::array<std::array<double, 2>, 2> j;
  j[0][0] = (1 - y) * (v[1][0] - v[0][0]) + y * (v[2][0] - v[3][0]);
  j[0][1] = (1 - x) * (v[3][0] - v[0][0]) + x * (v[2][0] - v[1][0]);
  j[1][0] = (1 - y) * (v[1][1] - v[0][1]) + y * (v[2][1] - v[3][1]);
  j[1][1] = (1 - x) * (v[3][1] - v[0][1]) + x * (v[2][1] - v[1][1]);
  return j;
}

std::array<double, 2> CellMap::to_reference(std::array<double, 2> p) const {
  std::array<double, 2> r{1.0 / 3.0, 1.0 / 3.0};
  if (shape == CellShape::triangle) {
    auto j = jacobian(0, 0);
    auto ji = inv2(j);
    double dx = p[0] - v[0][0], dy = p[1] - v[0][1];
    return {ji[0][0] * dx + ji[0][1] * dy, ji[1][0] * dx + ji[1][1] * dy};
  }
  r = {0.5, 0.5};
  for (int it = 0; it < 30; ++it) {
    auto f = to_physical(r[0], r[1]);
    double rx = f[0] - p[0], ry = f[1] - p[1];
    if (std::abs(rx) + std::abs(ry) < 1e-14) break;
    auto ji = inv2(jacobian(r[0], r[1]));
    r[0] -= ji[0][0] * rx + ji[0][1] * ry;
    r[1] -= ji[1][0] * rx + ji[1][1] * ry;
  }
  return r;
}

int total_dofs(const SpaceRef& space) {
  if (std::holds_alternative<const FunctionSpace*>(space))
    return std::get<const FunctionSpace*>(space)->total_dofs();
  return std::get<const MixedSpace*>(space)->total_dofs();
}

Numbering Numbering::of(std::vector<int> dofs) {
  Numbering n;
  n.global = std::move(dofs);
  n.local.reserve(n.global.size());
  for (size_t i = 0; i < n.global.size(); ++i) n.local.emplace(n.global[i], static_cast<int>(i));
  return n;
}

namespace {

struct SubspaceView {
  const FunctionSpace* fs;
  int block_offset;
};

std::vector<SubspaceView> views_of(const SpaceRef& space) {
  std::vector<SubspaceView> v;
  if (std::holds_alternative<const FunctionSpace*>(space)) {
    v.push_back({std::get<const FunctionSpace*>(space), 0});
  } else {
    const MixedSpace* m = std::get<const MixedSpace*>(space);
    for (size_t s = 0; s < m->subspaces.size(); ++s)
      v.push_back({&m->subspaces[s], m->block_offsets[s]});
  }
  return v;
}

int basis_degree(const ReferenceElement& e) {
  return e.family == ElementFamily::lagrange ? e.degree : 1;
}

int default_quad_degree(const FormDescriptor& form, const std::vector<SubspaceView>& views) {
  int dmax = 0;
  for (const auto& v : views) dmax = std::max(dmax, basis_degree(v.fs->element));
  if (form.kind == FormKind::allen_cahn) return 4 * dmax;
  return 2 * dmax + 2;
}

// Physical basis data of one space on one cell, at all quadrature points.
struct PhysBasis {
  int nb = 0;
  int vs = 1;
  // flattened [q][i][c] and [q][i][c][d]
  std::vector<double> val, grad;

  double v(int q, int i, int c) const { return val[(q * nb + i) * 2 + c]; }
  double g(int q, int i, int c, int d) const { return grad[((q * nb + i) * 2 + c) * 2 + d]; }
  double div(int q, int i) const { return g(q, i, 0, 0) + g(q, i, 1, 1); }
  double curl(int q, int i) const { return g(q, i, 1, 0) - g(q, i, 0, 1); }
};

struct SpaceTables {
  const FunctionSpace* fs;
  int block_offset;
  std::vector<double> ref_val, ref_grad;  // element tabulation at quad points
};

void physical_basis(const SpaceTables& t, const CellMap& map, const QuadratureRule& rule,
                    PhysBasis& out) {
  const ReferenceElement& e = t.fs->element;
  const int nb = e.n_basis;
  const int vsz = e.value_size;
  const int nq = static_cast<int>(rule.points.size());
  out.nb = nb;
  out.vs = vsz;
  out.val.assign(static_cast<size_t>(nq) * nb * 2, 0.0);
  out.grad.assign(static_cast<size_t>(nq) * nb * 4, 0.0);

  for (int q = 0; q < nq; ++q) {
    auto j = map.jacobian(rule.points[q][0], rule.points[q][1]);
    auto ji = inv2(j);
    double dj = det2(j);
    for (int i = 0; i < nb; ++i) {
      double rv[2] = {0, 0};
      double rg[2][2] = {{0, 0}, {0, 0}};
      for (int c = 0; c < vsz; ++c) {
        size_t base = (static_cast<size_t>(q) * nb + i) * vsz + c;
        rv[c] = t.ref_val[base];
        rg[c][0] = t.ref_grad[base * 2];
        rg[c][1] = t.ref_grad[base * 2 + 1];
      }
      double pv[2] = {0, 0};
      double pg[2][2] = {{0, 0}, {0, 0}};
      switch (e.mapping) {
        case MappingKind::identity:
          for (int c = 0; c < vsz; ++c) {
            pv[c] = rv[c];
            for (int d = 0; d < 2; ++d)
              pg[c][d] = rg[c][0] * ji[0][d] + rg[c][1] * ji[1][d];
          }
          break;
        case MappingKind::contravariant_piola:
          for (int c = 0; c < 2; ++c) {
            pv[c] = (j[c][0] * rv[0] + j[c][1] * rv[1]) / dj;
            for (int d = 0; d < 2; ++d) {
              double ge0 = rg[0][0] * ji[0][d] + rg[0][1] * ji[1][d];
              double ge1 = rg[1][0] * ji[0][d] + rg[1][1] * ji[1][d];
              pg[c][d] = (j[c][0] * ge0 + j[c][1] * ge1) / dj;
            }
          }
          break;
        case MappingKind::covariant_piola:
          for (int c = 0; c < 2; ++c) {
            pv[c] = ji[0][c] * rv[0] + ji[1][c] * rv[1];
            for (int d = 0; d < 2; ++d) {
              double ge0 = rg[0][0] * ji[0][d] + rg[0][1] * ji[1][d];
              double ge1 = rg[1][0] * ji[0][d] + rg[1][1] * ji[1][d];
              pg[c][d] = ji[0][c] * ge0 + ji[1][c] * ge1;
            }
          }
          break;
      }
      size_t base = (static_cast<size_t>(q) * nb + i) * 2;
      out.val[base] = pv[0];
      out.val[base + 1] = pv[1];
      out.grad[base * 2 + 0] = pg[0][0];
      out.grad[base * 2 + 1] = pg[0][1];
      out.grad[base * 2 + 2] = pg[1][0];
      out.grad[base * 2 + 3] = pg[1][1];
    }
  }
}

struct ElementContribution {
  std::vector<std::pair<int, int>> dofs;  // (global dof, sign), all spaces
  DenseMatrix matrix;
  Vector vec;  // rhs load or nonlinear residual
};

class CellKernel {
public:
  CellKernel(const FormDescriptor& form, const SpaceRef& space)
      : form_(form), views_(views_of(space)) {
    validate();
    const FunctionSpace* f0 = views_[0].fs;
    int qdeg = form.quad_degree >= 0 ? form.quad_degree
                                     : default_quad_degree(form, views_);
    rule_ = quadrature(f0->element.cell, qdeg);
    for (const auto& v : views_) {
      SpaceTables t{v.fs, v.block_offset, {}, {}};
      t.ref_val = v.fs->element.tabulate(rule_.points, 0);
      t.ref_grad = v.fs->element.tabulate(rule_.points, 1);
      tables_.push_back(std::move(t));
    }
    phys_.resize(tables_.size());
    nloc_ = 0;
    for (const auto& v : views_) nloc_ += v.fs->element.n_basis;
  }

  const PlexTopology& topology() const { return *views_[0].fs->topology; }

  /// Element matrix and vector for one cell. `state` may be null for linear
  /// forms; `need_matrix`/`need_vector` trim the work.
  void compute(PointId cell, const StateAccessor& state, bool need_matrix,
               bool need_vector, ElementContribution& out) const;

private:
  void validate() const;

  const FormDescriptor& form_;
  std::vector<SubspaceView> views_;
  QuadratureRule rule_;
  std::vector<SpaceTables> tables_;
  mutable std::vector<PhysBasis> phys_;
  int nloc_ = 0;
};

void CellKernel::validate() const {
  auto fam = [&](int i) { return views_[i].fs->element.family; };
  switch (form_.kind) {
    case FormKind::stokes:
      if (views_.size() != 2 || fam(0) != ElementFamily::lagrange ||
          views_[0].fs->element.value_size != 2 || fam(1) != ElementFamily::lagrange ||
          views_[1].fs->element.value_size != 1)
        throw std::invalid_argument("stokes form needs vector-Lagrange x Lagrange mixed space");
      break;
    case FormKind::hdiv_riesz:
      if (fam(0) != ElementFamily::raviart_thomas)
        throw std::invalid_argument("hdiv_riesz form needs a Raviart-Thomas space");
      break;
    case FormKind::hcurl_riesz:
      if (fam(0) != ElementFamily::nedelec_first_kind)
        throw std::invalid_argument("hcurl_riesz form needs a Nedelec space");
      break;
    case FormKind::elasticity:
      if (views_[0].fs->element.value_size != 2)
        throw std::invalid_argument("elasticity form needs a vector space");
      break;
    case FormKind::allen_cahn:
    case FormKind::stiffness:
      if (views_[0].fs->element.value_size != 1 && form_.kind == FormKind::allen_cahn)
        throw std::invalid_argument("allen_cahn form needs a scalar space");
      break;
    default:
      break;
  }
  if (form_.kind != FormKind::stokes && views_.size() != 1)
    throw std::invalid_argument("form/space arity mismatch");
}

void CellKernel::compute(PointId cell, const StateAccessor& state, bool need_matrix,
                         bool need_vector, ElementContribution& out) const {
  const PlexTopology& topo = topology();
  CellMap map = CellMap::from(topo, *views_[0].fs->geometry, cell);

  out.dofs.clear();
  for (const auto& v : views_)
    for (auto [g, s] : v.fs->cell_dofs[cell])
      out.dofs.emplace_back(g + v.block_offset, s);

  if (need_matrix) out.matrix = DenseMatrix(nloc_, nloc_);
  out.vec.assign(need_vector ? nloc_ : 0, 0.0);

  for (size_t s = 0; s < tables_.size(); ++s)
    physical_basis(tables_[s], map, rule_, phys_[s]);
  const PhysBasis& b0 = phys_[0];
  const int nq = static_cast<int>(rule_.points.size());
  const int nb0 = b0.nb;

  // Local state coefficients (allen_cahn only).
  std::vector<double> uloc;
  if (form_.nonlinear() && state) {
    uloc.resize(nb0);
    for (int i = 0; i < nb0; ++i)
      uloc[i] = out.dofs[i].second * state(out.dofs[i].first);
  }

  std::vector<double> fq(2, 0.0);
  for (int q = 0; q < nq; ++q) {
    auto jq = map.jacobian(rule_.points[q][0], rule_.points[q][1]);
    const double w = rule_.weights[q] * det2(jq);

    if (need_vector && form_.rhs) {
      auto xy = map.to_physical(rule_.points[q][0], rule_.points[q][1]);
      fq[0] = fq[1] = 0.0;
      form_.rhs(xy[0], xy[1], fq.data());
    }

    switch (form_.kind) {
      case FormKind::mass:
      case FormKind::hdiv_riesz:
      case FormKind::hcurl_riesz: {
        const double alpha =
            form_.kind == FormKind::mass ? 0.0 : form_.alpha;
        for (int i = 0; i < nb0; ++i) {
          if (need_matrix)
            for (int j = 0; j < nb0; ++j) {
              double m = b0.v(q, i, 0) * b0.v(q, j, 0) + b0.v(q, i, 1) * b0.v(q, j, 1);
              double extra = 0.0;
              if (form_.kind == FormKind::hdiv_riesz)
                extra = b0.div(q, i) * b0.div(q, j);
              else if (form_.kind == FormKind::hcurl_riesz)
                extra = b0.curl(q, i) * b0.curl(q, j);
              out.matrix(i, j) += w * (m + alpha * extra);
            }
          if (need_vector && form_.rhs)
            out.vec[i] += w * (fq[0] * b0.v(q, i, 0) + fq[1] * b0.v(q, i, 1));
        }
        break;
      }
      case FormKind::stiffness: {
        for (int i = 0; i < nb0; ++i) {
          if (need_matrix)
            for (int j = 0; j < nb0; ++j) {
              double s = 0.0;
              for (int c = 0; c < b0.vs; ++c)
                s += b0.g(q, i, c, 0) * b0.g(q, j, c, 0) + b0.g(q, i, c, 1) * b0.g(q, j, c, 1);
              out.matrix(i, j) += w * s;
            }
          if (need_vector && form_.rhs)
            out.vec[i] += w * (fq[0] * b0.v(q, i, 0) + fq[1] * b0.v(q, i, 1));
        }
        break;
      }
      case FormKind::elasticity: {
        for (int i = 0; i < nb0; ++i) {
          if (need_matrix)
            for (int j = 0; j < nb0; ++j) {
              double ee = 0.0;
              for (int a = 0; a < 2; ++a)
                for (int d = 0; d < 2; ++d) {
                  double ei = 0.5 * (b0.g(q, i, a, d) + b0.g(q, i, d, a));
                  double ej = 0.5 * (b0.g(q, j, a, d) + b0.g(q, j, d, a));
                  ee += ei * ej;
                }
              out.matrix(i, j) += w * (form_.mu * ee +
                                       form_.gamma * b0.div(q, i) * b0.div(q, j));
            }
          if (need_vector && form_.rhs)
            out.vec[i] += w * (fq[0] * b0.v(q, i, 0) + fq[1] * b0.v(q, i, 1));
        }
        break;
      }
      case FormKind::stokes: {
        const PhysBasis& bp = phys_[1];
        const int nbp = bp.nb;
        for (int i = 0; i < nb0; ++i) {
          if (need_matrix) {
            for (int j = 0; j < nb0; ++j) {
              double ee = 0.0;
              for (int a = 0; a < 2; ++a)
                for (int d = 0; d < 2; ++d) {
                  double ei = 0.5 * (b0.g(q, i, a, d) + b0.g(q, i, d, a));
                  double ej = 0.5 * (b0.g(q, j, a, d) + b0.g(q, j, d, a));
                  ee += ei * ej;
                }
              out.matrix(i, j) += w * 2.0 * form_.nu * ee;
            }
            for (int j = 0; j < nbp; ++j) {
              double c = -w * bp.v(q, j, 0) * b0.div(q, i);
              out.matrix(i, nb0 + j) += c;
              out.matrix(nb0 + j, i) += c;
            }
          }
          if (need_vector && form_.rhs)
            out.vec[i] += w * (fq[0] * b0.v(q, i, 0) + fq[1] * b0.v(q, i, 1));
        }
        break;
      }
      case FormKind::allen_cahn: {
        double uq = 0.0, gx = 0.0, gy = 0.0;
        if (!uloc.empty())
          for (int i = 0; i < nb0; ++i) {
            uq += uloc[i] * b0.v(q, i, 0);
            gx += uloc[i] * b0.g(q, i, 0, 0);
            gy += uloc[i] * b0.g(q, i, 0, 1);
          }
        const double dphi = 3.0 * uq * uq - 1.0;  // d/du (u^3 - u)
        for (int i = 0; i < nb0; ++i) {
          if (need_matrix)
            for (int j = 0; j < nb0; ++j)
              out.matrix(i, j) += w * (b0.g(q, i, 0, 0) * b0.g(q, j, 0, 0) +
                                       b0.g(q, i, 0, 1) * b0.g(q, j, 0, 1) +
                                       dphi * b0.v(q, i, 0) * b0.v(q, j, 0));
          if (need_vector) {
            double fi = gx * b0.g(q, i, 0, 0) + gy * b0.g(q, i, 0, 1) +
                        (uq * uq * uq - uq) * b0.v(q, i, 0);
            if (form_.rhs) fi -= fq[0] * b0.v(q, i, 0);
            out.vec[i] += w * fi;
          }
        }
        break;
      }
    }
  }
}

const ConstraintSet& resolve_constraints(const SpaceRef& space,
                                         const std::vector<DirichletBC>& bcs,
                                         ConstraintSet& storage) {
  if (std::holds_alternative<const FunctionSpace*>(space))
    storage = ConstraintSet::build(*std::get<const FunctionSpace*>(space), bcs);
  else
    storage = ConstraintSet::build(*std::get<const MixedSpace*>(space), bcs);
  return storage;
}

}  // namespace

AssembledSystem assemble_global(const FormDescriptor& form, const SpaceRef& space,
                                const std::vector<DirichletBC>& bcs, const Vector* state) {
  CellKernel kernel(form, space);
  const int n = total_dofs(space);
  AssembledSystem sys;
  resolve_constraints(space, bcs, sys.constraints);
  sys.rhs.assign(n, 0.0);

  StateAccessor acc;
  if (state) acc = [state](int g) { return (*state)[g]; };

  std::vector<std::tuple<int, int, double>> triplets;
  ElementContribution e;
  const bool load_vector = !form.nonlinear() || form.rhs != nullptr;
  Stratum cells = kernel.topology().stratum(2);
  for (PointId c = cells.begin; c < cells.end; ++c) {
    kernel.compute(c, acc, true, load_vector, e);
    const int nl = static_cast<int>(e.dofs.size());
    for (int i = 0; i < nl; ++i) {
      auto [gi, si] = e.dofs[i];
      const bool ri_con = sys.constraints.constrained(gi);
      if (!ri_con && !e.vec.empty() && !form.nonlinear())
        sys.rhs[gi] += si * e.vec[i];
      for (int j = 0; j < nl; ++j) {
        auto [gj, sj] = e.dofs[j];
        const double v = si * sj * e.matrix(i, j);
        if (sys.constraints.constrained(gj)) {
          // lift the boundary value into the right hand side
          if (!ri_con && !form.nonlinear())
            sys.rhs[gi] -= v * sys.constraints.value_of(gj);
          continue;
        }
        if (ri_con) continue;
        triplets.emplace_back(gi, gj, v);
      }
    }
  }
  for (size_t k = 0; k < sys.constraints.dofs.size(); ++k) {
    int d = sys.constraints.dofs[k];
    triplets.emplace_back(d, d, 1.0);
    sys.rhs[d] = form.nonlinear() ? 0.0 : sys.constraints.values[k];
  }
  sys.matrix = SparseMatrix::from_triplets(n, n, std::move(triplets));
  return sys;
}

LocalSystem assemble_cells(const FormDescriptor& form, const SpaceRef& space,
                           const std::vector<PointId>& cells, const Numbering& rows,
                           const Numbering& cols, const StateAccessor& state) {
  CellKernel kernel(form, space);
  LocalSystem out;
  out.matrix = DenseMatrix(rows.size(), cols.size());
  const bool want_residual = form.nonlinear() && state != nullptr;
  if (want_residual) out.residual.assign(rows.size(), 0.0);

  ElementContribution e;
  for (PointId c : cells) {
    kernel.compute(c, state, true, want_residual, e);
    const int nl = static_cast<int>(e.dofs.size());
    for (int i = 0; i < nl; ++i) {
      auto [gi, si] = e.dofs[i];
      int li = rows.local_of(gi);
      if (li < 0) continue;
      if (want_residual) out.residual[li] += si * e.vec[i];
      for (int j = 0; j < nl; ++j) {
        auto [gj, sj] = e.dofs[j];
        int lj = cols.local_of(gj);
        if (lj < 0) continue;
        out.matrix(li, lj) += si * sj * e.matrix(i, j);
      }
    }
  }
  return out;
}

Vector residual(const FormDescriptor& form, const SpaceRef& space, const Vector& state,
                const ConstraintSet& constraints) {
  if (!form.nonlinear()) throw std::invalid_argument("residual: form is linear");
  CellKernel kernel(form, space);
  Vector r(total_dofs(space), 0.0);
  StateAccessor acc = [&state](int g) { return state[g]; };
  ElementContribution e;
  Stratum cells = kernel.topology().stratum(2);
  for (PointId c = cells.begin; c < cells.end; ++c) {
    kernel.compute(c, acc, false, true, e);
    for (size_t i = 0; i < e.dofs.size(); ++i) {
      auto [g, s] = e.dofs[i];
      r[g] += s * e.vec[i];
    }
  }
  for (int d : constraints.dofs) r[d] = 0.0;
  return r;
}

}  // namespace patchmg
