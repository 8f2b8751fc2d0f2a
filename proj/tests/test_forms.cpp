#include <cmath>
#include <random>

#include "doctest.h"
#include "patchmg/forms.hpp"

using namespace patchmg;

namespace {

double max_abs(const SparseMatrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("P1 mass matrix on the unit right triangle") {
  PlexTopology topo = PlexTopology::from_cells(CellShape::triangle, 3, {{0, 1, 2}});
  MeshGeometry geom;
  geom.coordinates = {{0, 0}, {1, 0}, {0, 1}};
  FunctionSpace p1 = build_space(topo, geom, lagrange(CellShape::triangle, 1));

  FormDescriptor form;
  form.kind = FormKind::mass;
  AssembledSystem sys = assemble_global(form, &p1, {});
  const double a = 0.5 / 12.0;  // area / 12
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(sys.matrix.entry(i, j) ==
            doctest::Approx(a * (i == j ? 2.0 : 1.0)).epsilon(1e-13));
}

TEST_CASE("stiffness row sums vanish without boundary conditions") {
  Mesh m = build_structured(4, 4, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  FormDescriptor form;
  form.kind = FormKind::stiffness;
  AssembledSystem sys = assemble_global(form, &p1, {});
  auto offs = sys.matrix.row_offsets();
  auto vals = sys.matrix.values();
  for (int r = 0; r < sys.matrix.rows(); ++r) {
    double s = 0.0;
    for (int k = offs[r]; k < offs[r + 1]; ++k) s += vals[k];
    CHECK(std::abs(s) <= 1e-13);
  }
}

TEST_CASE("hdiv riesz with alpha 0 equals the mass matrix") {
  Mesh m = build_structured(3, 3, CellShape::triangle);
  FunctionSpace rt = build_space(m.topology, m.geometry, raviart_thomas_0(CellShape::triangle));
  FormDescriptor mass;
  mass.kind = FormKind::mass;
  FormDescriptor riesz;
  riesz.kind = FormKind::hdiv_riesz;
  riesz.alpha = 0.0;
  DenseMatrix a = DenseMatrix::from_sparse(assemble_global(mass, &rt, {}).matrix);
  DenseMatrix b = DenseMatrix::from_sparse(assemble_global(riesz, &rt, {}).matrix);
  REQUIRE(a.rows() == b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) CHECK(a(i, j) == b(i, j));
}

TEST_CASE("symmetric kinds assemble symmetric matrices") {
  Mesh m = build_structured(3, 3, CellShape::triangle);
  FunctionSpace v1 = build_space(m.topology, m.geometry, vector_lagrange(CellShape::triangle, 2));
  FormDescriptor el;
  el.kind = FormKind::elasticity;
  el.gamma = 100.0;
  std::vector<DirichletBC> bcs = {{0, BoundarySelector::all(), nullptr}};
  SparseMatrix a = assemble_global(el, &v1, bcs).matrix;
  double scale = max_abs(a);
  for (int i = 0; i < a.rows(); ++i) {
    auto offs = a.row_offsets();
    auto cols = a.col_indices();
    auto vals = a.values();
    for (int k = offs[i]; k < offs[i + 1]; ++k)
      CHECK(std::abs(vals[k] - a.entry(cols[k], i)) <= 1e-12 * scale);
  }
}

TEST_CASE("gradients of P1 functions lie in the curl-curl kernel") {
  // The edge-circulation interpolant of grad(phi) picks up exactly the
  // endpoint difference of phi, and the curl term annihilates such fields:
  // changing alpha must not change A*g.
  Mesh m = build_structured(4, 4, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  FunctionSpace nd = build_space(m.topology, m.geometry, nedelec_0(CellShape::triangle));

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector phi(p1.total_dofs());
  for (double& v : phi) v = u(rng);

  Vector g(nd.total_dofs(), 0.0);
  const Stratum edges = m.topology.stratum(1);
  for (PointId e = edges.begin; e < edges.end; ++e) {
    const auto& cone = m.topology.cone(e);  // lower -> higher vertex id
    int lo = p1.dofs_on_points({cone[0]}).at(0);
    int hi = p1.dofs_on_points({cone[1]}).at(0);
    g[nd.dofs_on_points({e}).at(0)] = phi[hi] - phi[lo];
  }

  FormDescriptor f1, f2;
  f1.kind = f2.kind = FormKind::hcurl_riesz;
  f1.alpha = 1.0;
  f2.alpha = 1e6;
  SparseMatrix a1 = assemble_global(f1, &nd, {}).matrix;
  SparseMatrix a2 = assemble_global(f2, &nd, {}).matrix;
  Vector y1 = a1.apply(g);
  Vector y2 = a2.apply(g);
  double diff = 0.0, gn = norm2(g);
  for (size_t i = 0; i < y1.size(); ++i) diff += (y2[i] - y1[i]) * (y2[i] - y1[i]);
  // The kernel is exact up to roundoff in the element curls, which the large
  // coefficient amplifies linearly.
  CHECK(std::sqrt(diff) <= 1e-12 * f2.alpha * gn);
}

TEST_CASE("elasticity rigid modes are in the unconstrained kernel") {
  Mesh m = build_structured(3, 3, CellShape::triangle);
  FunctionSpace v1 = build_space(m.topology, m.geometry, vector_lagrange(CellShape::triangle, 1));
  FormDescriptor el;
  el.kind = FormKind::elasticity;
  el.gamma = 10.0;
  SparseMatrix a = assemble_global(el, &v1, {}).matrix;

  auto coords = v1.dof_coordinates();
  auto mode = [&](int which) {
    Vector u(v1.total_dofs(), 0.0);
    for (int p = 0; p < static_cast<int>(v1.section.count.size()); ++p)
      for (int j = 0; j < v1.section.count[p]; ++j) {
        int dof = v1.section.offset[p] + j;
        int comp = j % 2;
        auto c = coords[dof];
        if (which == 0) u[dof] = comp == 0 ? 1.0 : 0.0;        // x translation
        else if (which == 1) u[dof] = comp == 1 ? 1.0 : 0.0;   // y translation
        else u[dof] = comp == 0 ? -c[1] : c[0];                // rotation
      }
    return u;
  };
  double scale = max_abs(a);
  for (int which : {0, 1, 2}) {
    Vector u = mode(which);
    Vector y = a.apply(u);
    CHECK(norm2(y) <= 1e-10 * scale * norm2(u));
  }
}

TEST_CASE("patch-restricted assembly over all cells equals global assembly") {
  Mesh m = build_structured(3, 3, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  FormDescriptor form;
  form.kind = FormKind::stiffness;
  SparseMatrix global = assemble_global(form, &p1, {}).matrix;

  std::vector<int> all(p1.total_dofs());
  for (int i = 0; i < p1.total_dofs(); ++i) all[i] = i;
  Numbering num = Numbering::of(all);
  std::vector<PointId> cells;
  const Stratum cs = m.topology.stratum(2);
  for (PointId c = cs.begin; c < cs.end; ++c) cells.push_back(c);

  LocalSystem local = assemble_cells(form, &p1, cells, num, num);
  double scale = max_abs(global);
  for (int i = 0; i < global.rows(); ++i)
    for (int j = 0; j < global.cols(); ++j)
      CHECK(std::abs(local.matrix(i, j) - global.entry(i, j)) <= 1e-12 * scale);

  LocalSystem empty = assemble_cells(form, &p1, {}, num, num);
  CHECK(empty.matrix.max_abs() == 0.0);
}

TEST_CASE("nonlinear residual at zero state is the negative load vector") {
  Mesh m = build_structured(4, 4, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  auto f = [](double x, double y, double* out) { out[0] = x + y; };

  FormDescriptor ac;
  ac.kind = FormKind::allen_cahn;
  ac.rhs = f;
  FormDescriptor mass;
  mass.kind = FormKind::mass;
  mass.rhs = f;

  Vector b = assemble_global(mass, &p1, {}).rhs;
  Vector u0(p1.total_dofs(), 0.0);
  Vector r = residual(ac, &p1, u0, ConstraintSet::empty(p1.total_dofs()));
  REQUIRE(r.size() == b.size());
  double bn = norm2(b);
  for (size_t i = 0; i < r.size(); ++i) CHECK(std::abs(r[i] + b[i]) <= 1e-13 * bn);
}

TEST_CASE("nonlinear Jacobian matches finite differences") {
  Mesh m = build_structured(4, 4, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  std::vector<DirichletBC> bcs = {{0, BoundarySelector::all(), nullptr}};
  ConstraintSet cs = ConstraintSet::build(p1, bcs);

  FormDescriptor ac;
  ac.kind = FormKind::allen_cahn;
  ac.rhs = [](double x, double y, double* out) { out[0] = std::sin(x) * std::cos(y); };

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  Vector u(p1.total_dofs());
  for (double& v : u) v = dist(rng);
  for (int d : cs.dofs) u[d] = 0.0;

  SparseMatrix jac = assemble_global(ac, &p1, bcs, &u).matrix;

  const double h = 1e-6;
  for (int j = 0; j < p1.total_dofs(); ++j) {
    if (cs.constrained(j)) continue;
    Vector up = u, um = u;
    up[j] += h;
    um[j] -= h;
    Vector rp = residual(ac, &p1, up, cs);
    Vector rm = residual(ac, &p1, um, cs);
    for (int i = 0; i < p1.total_dofs(); ++i) {
      if (cs.constrained(i)) continue;
      double fd = (rp[i] - rm[i]) / (2.0 * h);
      CHECK(std::abs(fd - jac.entry(i, j)) <= 1e-6 * (1.0 + std::abs(jac.entry(i, j))));
    }
  }
}
