#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "patchmg/space.hpp"

using namespace patchmg;

namespace {

PointId vertex_at(const Mesh& m, double x, double y) {
  const Stratum s = m.topology.stratum(0);
  for (int v = 0; v < s.size(); ++v) {
    auto c = m.geometry.coordinates[v];
    if (std::abs(c[0] - x) < 1e-12 && std::abs(c[1] - y) < 1e-12) return s.begin + v;
  }
  return -1;
}

}  // namespace

TEST_CASE("dof counts per family") {
  Mesh m = build_structured(2, 2, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  CHECK(p1.total_dofs() == 9);

  FunctionSpace rt = build_space(m.topology, m.geometry, raviart_thomas_0(CellShape::triangle));
  CHECK(rt.total_dofs() == 16);  // one per edge

  FunctionSpace p4 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 4));
  CHECK(p4.total_dofs() == 9 + 16 * 3 + 8 * 3);  // 81

  FunctionSpace v2 = build_space(m.topology, m.geometry, vector_lagrange(CellShape::triangle, 2));
  CHECK(v2.total_dofs() == 2 * (9 + 16));
}

TEST_CASE("section offsets consistent") {
  Mesh m = build_structured(3, 2, CellShape::triangle);
  FunctionSpace p2 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 2));
  int total = 0;
  for (int c : p2.section.count) total += c;
  CHECK(total == p2.section.total);
  for (int p = 0; p + 1 < static_cast<int>(p2.section.offset.size()); ++p)
    if (p2.section.count[p] > 0)
      CHECK(p2.section.offset[p] + p2.section.count[p] <= p2.section.total);
}

TEST_CASE("cell dof signs") {
  Mesh m = build_structured(2, 2, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  for (const auto& cd : p1.cell_dofs)
    for (auto [g, s] : cd) CHECK(s == 1);  // Lagrange is orientation-free

  FunctionSpace rt = build_space(m.topology, m.geometry, raviart_thomas_0(CellShape::triangle));
  int minus = 0;
  for (const auto& cd : rt.cell_dofs)
    for (auto [g, s] : cd) {
      CHECK((s == 1 || s == -1));
      if (s == -1) ++minus;
    }
  CHECK(minus > 0);  // some cells traverse edges against the global direction
  // Each interior edge is seen with opposite signs by its two cells.
  const Stratum edges = m.topology.stratum(1);
  for (PointId e = edges.begin; e < edges.end; ++e) {
    const auto& sup = m.topology.support(e);
    if (sup.size() != 2) continue;
    int dof = rt.dofs_on_points({e}).at(0);
    int s0 = 0, s1 = 0;
    for (auto [g, s] : rt.cell_dofs[sup[0]])
      if (g == dof) s0 = s;
    for (auto [g, s] : rt.cell_dofs[sup[1]])
      if (g == dof) s1 = s;
    CHECK(s0 * s1 == -1);
  }
}

TEST_CASE("dofs_on_points examples") {
  Mesh m = build_structured(2, 2, CellShape::triangle);
  PointId center = vertex_at(m, 0.5, 0.5);
  REQUIRE(center >= 0);
  auto star = m.topology.star({center});

  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  CHECK(p1.dofs_on_points(star).size() == 1);

  FunctionSpace rt = build_space(m.topology, m.geometry, raviart_thomas_0(CellShape::triangle));
  CHECK(rt.dofs_on_points(star).size() == 6);

  CHECK(p1.dofs_on_points({}).empty());
}

TEST_CASE("dirichlet dof selection") {
  Mesh m = build_structured(2, 2, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  CHECK(dirichlet_dofs(p1, BoundarySelector::all()).size() == 8);
  CHECK(dirichlet_dofs(p1, BoundarySelector::none()).empty());
  CHECK(dirichlet_dofs(p1, BoundarySelector::side(1, 0.0)).size() == 3);

  FunctionSpace rt = build_space(m.topology, m.geometry, raviart_thomas_0(CellShape::triangle));
  CHECK(dirichlet_dofs(rt, BoundarySelector::all()).size() == 8);
}

TEST_CASE("constraint set resolves boundary values") {
  Mesh m = build_structured(4, 4, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  std::vector<DirichletBC> bcs;
  bcs.push_back({0, BoundarySelector::all(),
                 [](double x, double y, int) { return x + 2.0 * y; }});
  ConstraintSet cs = ConstraintSet::build(p1, bcs);
  CHECK(cs.dofs.size() == 16);
  CHECK(std::is_sorted(cs.dofs.begin(), cs.dofs.end()));
  auto coords = p1.dof_coordinates();
  for (size_t i = 0; i < cs.dofs.size(); ++i) {
    auto c = coords[cs.dofs[i]];
    CHECK(cs.values[i] == doctest::Approx(c[0] + 2.0 * c[1]).epsilon(1e-14));
    CHECK(cs.constrained(cs.dofs[i]));
  }
  // Later conditions win on overlap.
  bcs.push_back({0, BoundarySelector::side(0, 0.0),
                 [](double, double, int) { return -1.0; }});
  ConstraintSet cs2 = ConstraintSet::build(p1, bcs);
  for (size_t i = 0; i < cs2.dofs.size(); ++i) {
    auto c = coords[cs2.dofs[i]];
    if (std::abs(c[0]) < 1e-12)
      CHECK(cs2.values[i] == doctest::Approx(-1.0));
  }
}

TEST_CASE("mixed space block numbering") {
  Mesh m = build_structured(2, 2, CellShape::quadrilateral);
  std::vector<FunctionSpace> blocks;
  blocks.push_back(build_space(m.topology, m.geometry, vector_lagrange(CellShape::quadrilateral, 2)));
  blocks.push_back(build_space(m.topology, m.geometry, lagrange(CellShape::quadrilateral, 1)));
  int v_dofs = blocks[0].total_dofs();
  int p_dofs = blocks[1].total_dofs();
  MixedSpace mixed = MixedSpace::build(std::move(blocks));
  CHECK(mixed.total_dofs() == v_dofs + p_dofs);
  CHECK(mixed.block_offsets[0] == 0);
  CHECK(mixed.block_offsets[1] == v_dofs);
  CHECK(mixed.subspace_of(0) == 0);
  CHECK(mixed.subspace_of(v_dofs - 1) == 0);
  CHECK(mixed.subspace_of(v_dofs) == 1);
  CHECK(mixed.subspace_of(v_dofs + p_dofs - 1) == 1);

  std::vector<DirichletBC> bcs;
  bcs.push_back({0, BoundarySelector::all(), nullptr});
  ConstraintSet cs = ConstraintSet::build(mixed, bcs);
  for (int d : cs.dofs) CHECK(mixed.subspace_of(d) == 0);  // pressure unconstrained
}

TEST_CASE("dof coordinates match nodes") {
  Mesh m = build_structured(2, 2, CellShape::triangle);
  FunctionSpace p2 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 2));
  auto coords = p2.dof_coordinates();
  REQUIRE(static_cast<int>(coords.size()) == p2.total_dofs());
  // Vertex dofs sit at vertex coordinates.
  const Stratum verts = m.topology.stratum(0);
  for (PointId v = verts.begin; v < verts.end; ++v) {
    int dof = p2.dofs_on_points({v}).at(0);
    auto g = m.geometry.coordinates[v - verts.begin];
    CHECK(coords[dof][0] == doctest::Approx(g[0]).epsilon(1e-14));
    CHECK(coords[dof][1] == doctest::Approx(g[1]).epsilon(1e-14));
  }
}
