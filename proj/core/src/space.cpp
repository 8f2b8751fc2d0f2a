#include "patchmg/space.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace patchmg {

namespace {
constexpr double kSideTol = 1e-12;
}

FunctionSpace build_space(const PlexTopology& topo, const MeshGeometry& geom,
                          const ReferenceElement& element) {
  const bool tri = topo.cell_shape() == CellShape::triangle;
  if ((element.cell == CellShape::triangle) != tri)
    throw std::invalid_argument("build_space: element cell type does not match mesh");

  FunctionSpace fs;
  fs.topology = &topo;
  fs.geometry = &geom;
  fs.element = element;

  auto dofs_per = [&](int dim) {
    const auto& ents = element.entity_dofs[dim];
    return ents.empty() ? 0 : static_cast<int>(ents[0].size());
  };

  Section& sec = fs.section;
  sec.count.assign(topo.num_points(), 0);
  sec.offset.assign(topo.num_points(), 0);
  for (int d = 0; d <= 2; ++d) {
    Stratum s = topo.stratum(d);
    for (int p = s.begin; p < s.end; ++p) sec.count[p] = dofs_per(d);
  }
  int running = 0;
  for (int p = 0; p < topo.num_points(); ++p) {
    sec.offset[p] = running;
    running += sec.count[p];
  }
  sec.total = running;

  const bool piola = element.mapping != MappingKind::identity;
  const int ncomp = element.components;
  fs.cell_dofs.resize(topo.num_cells());
  for (int c = 0; c < topo.num_cells(); ++c) {
    auto& map = fs.cell_dofs[c];
    map.assign(element.n_basis, {-1, 1});
    auto vs = topo.cell_vertices(c);
    const auto& edges = topo.cone(c);
    const auto& orient = topo.cone_orientation(c);

    for (size_t lv = 0; lv < vs.size(); ++lv) {
      const auto& local = element.entity_dofs[0][lv];
      for (size_t i = 0; i < local.size(); ++i)
        map[local[i]] = {sec.offset[vs[lv]] + static_cast<int>(i), 1};
    }
    for (size_t le = 0; le < edges.size(); ++le) {
      const auto& local = element.entity_dofs[1][le];
      const int n = static_cast<int>(local.size());
      if (n == 0) continue;
      const bool reversed = orient[le] < 0;
      // Global edge dofs are ordered along the stored (low-to-high vertex id)
      // direction; a cell traversing the edge backwards sees them in reverse
      // node order. Component blocks within a node keep their order.
      const int nnodes = n / ncomp;
      for (int node = 0; node < nnodes; ++node) {
        int gnode = reversed ? nnodes - 1 - node : node;
        for (int comp = 0; comp < ncomp; ++comp) {
          int sign = (piola && reversed) ? -1 : 1;
          map[local[node * ncomp + comp]] = {
              sec.offset[edges[le]] + gnode * ncomp + comp, sign};
        }
      }
    }
    const auto& interior = element.entity_dofs[2].empty() ? std::vector<int>{}
                                                          : element.entity_dofs[2][0];
    for (size_t i = 0; i < interior.size(); ++i)
      map[interior[i]] = {sec.offset[c] + static_cast<int>(i), 1};

    for (auto& [g, s] : map)
      if (g < 0) throw std::logic_error("build_space: unassigned local dof");
  }
  return fs;
}

std::vector<int> FunctionSpace::dofs_on_points(const std::vector<PointId>& points) const {
  std::vector<PointId> sorted(points);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<int> dofs;
  for (PointId p : sorted) {
    if (p < 0 || p >= static_cast<int>(section.count.size()))
      throw std::invalid_argument("dofs_on_points: point out of range");
    for (int i = 0; i < section.count[p]; ++i) dofs.push_back(section.offset[p] + i);
  }
  return dofs;
}

std::vector<std::array<double, 2>> FunctionSpace::dof_coordinates() const {
  if (element.family != ElementFamily::lagrange)
    throw std::invalid_argument("dof_coordinates: Lagrange spaces only");
  std::vector<std::array<double, 2>> coords(section.total, {0.0, 0.0});
  const int voff = topology->stratum(0).begin;
  const int ncomp = element.components;
  for (int c = 0; c < topology->num_cells(); ++c) {
    auto vs = topology->cell_vertices(c);
    auto ref_to_phys = [&](double x, double y) -> std::array<double, 2> {
      const auto& g = geometry->coordinates;
      if (element.cell == CellShape::triangle) {
        auto a = g[vs[0] - voff], b = g[vs[1] - voff], cc = g[vs[2] - voff];
        return {a[0] + x * (b[0] - a[0]) + y * (cc[0] - a[0]),
                a[1] + x * (b[1] - a[1]) + y * (cc[1] - a[1])};
      }
      auto a = g[vs[0] - voff], b = g[vs[1] - voff], cc = g[vs[2] - voff], d = g[vs[3] - voff];
      double s0 = (1 - x) * (1 - y), s1 = x * (1 - y), s2 = x * y, s3 = (1 - x) * y;
      return {s0 * a[0] + s1 * b[0] + s2 * cc[0] + s3 * d[0],
              s0 * a[1] + s1 * b[1] + s2 * cc[1] + s3 * d[1]};
    };
    for (int i = 0; i < element.n_basis; ++i) {
      auto node = element.nodes[i / ncomp];
      coords[cell_dofs[c][i].first] = ref_to_phys(node[0], node[1]);
    }
  }
  return coords;
}

MixedSpace MixedSpace::build(std::vector<FunctionSpace> spaces) {
  MixedSpace m;
  m.subspaces = std::move(spaces);
  int off = 0;
  for (const auto& s : m.subspaces) {
    m.block_offsets.push_back(off);
    off += s.total_dofs();
  }
  return m;
}

int MixedSpace::total_dofs() const {
  return block_offsets.back() + subspaces.back().total_dofs();
}

int MixedSpace::subspace_of(int global_dof) const {
  for (int s = static_cast<int>(subspaces.size()) - 1; s >= 0; --s)
    if (global_dof >= block_offsets[s]) return s;
  throw std::invalid_argument("subspace_of: dof out of range");
}

namespace {

std::vector<PointId> selected_boundary_points(const FunctionSpace& space,
                                              const BoundarySelector& sel) {
  if (sel.kind == BoundarySelector::Kind::none) return {};
  const PlexTopology& topo = *space.topology;
  const int voff = topo.stratum(0).begin;
  std::vector<PointId> facets;
  Stratum edges = topo.stratum(1);
  for (PointId e = edges.begin; e < edges.end; ++e) {
    if (topo.support(e).size() != 1) continue;
    if (sel.kind == BoundarySelector::Kind::side) {
      const auto& ev = topo.cone(e);
      bool on = true;
      for (PointId v : ev) {
        double coord = space.geometry->coordinates[v - voff][sel.axis];
        if (std::abs(coord - sel.value) > kSideTol) on = false;
      }
      if (!on) continue;
    }
    facets.push_back(e);
  }
  return topo.closure(facets);
}

}  // namespace

std::vector<int> dirichlet_dofs(const FunctionSpace& space, const BoundarySelector& sel) {
  return space.dofs_on_points(selected_boundary_points(space, sel));
}

std::vector<int> dirichlet_dofs(const MixedSpace& mixed, const BoundarySelector& sel,
                                int subspace) {
  if (subspace < 0 || subspace >= static_cast<int>(mixed.subspaces.size()))
    throw std::invalid_argument("dirichlet_dofs: bad subspace index");
  std::vector<int> dofs = dirichlet_dofs(mixed.subspaces[subspace], sel);
  for (int& d : dofs) d += mixed.block_offsets[subspace];
  return dofs;
}

double ConstraintSet::value_of(int dof) const {
  auto it = std::lower_bound(dofs.begin(), dofs.end(), dof);
  if (it == dofs.end() || *it != dof) return 0.0;
  return values[it - dofs.begin()];
}

ConstraintSet ConstraintSet::empty(int total_dofs) {
  ConstraintSet cs;
  cs.is_constrained.assign(total_dofs, 0);
  return cs;
}

namespace {
ConstraintSet build_constraints(int total, const std::vector<DirichletBC>& bcs,
                                const std::function<std::vector<int>(const DirichletBC&)>& dof_fn,
                                const std::function<std::array<double, 2>(int)>& coord_fn,
                                const std::function<int(int)>& comp_fn) {
  std::map<int, double> entries;
  for (const auto& bc : bcs) {
    for (int d : dof_fn(bc)) {
      double v = 0.0;
      if (bc.value) {
        auto xy = coord_fn(d);
        v = bc.value(xy[0], xy[1], comp_fn(d));
      }
      entries[d] = v;
    }
  }
  ConstraintSet cs;
  cs.is_constrained.assign(total, 0);
  for (auto [d, v] : entries) {
    cs.dofs.push_back(d);
    cs.values.push_back(v);
    cs.is_constrained[d] = 1;
  }
  return cs;
}
}  // namespace

ConstraintSet ConstraintSet::build(const FunctionSpace& space,
                                   const std::vector<DirichletBC>& bcs) {
  std::vector<std::array<double, 2>> coords;
  bool needs_coords = std::any_of(bcs.begin(), bcs.end(),
                                  [](const DirichletBC& b) { return bool(b.value); });
  if (needs_coords) coords = space.dof_coordinates();
  const int ncomp = space.element.components;
  return build_constraints(
      space.total_dofs(), bcs,
      [&](const DirichletBC& b) { return dirichlet_dofs(space, b.selector); },
      [&](int d) { return coords.empty() ? std::array<double, 2>{0, 0} : coords[d]; },
      [&](int d) { return d % ncomp; });
}

ConstraintSet ConstraintSet::build(const MixedSpace& mixed,
                                   const std::vector<DirichletBC>& bcs) {
  std::vector<std::vector<std::array<double, 2>>> coords(mixed.subspaces.size());
  for (const auto& bc : bcs)
    if (bc.value && coords[bc.subspace].empty())
      coords[bc.subspace] = mixed.subspaces[bc.subspace].dof_coordinates();
  return build_constraints(
      mixed.total_dofs(), bcs,
      [&](const DirichletBC& b) { return dirichlet_dofs(mixed, b.selector, b.subspace); },
      [&](int d) {
        int s = mixed.subspace_of(d);
        const auto& c = coords[s];
        return c.empty() ? std::array<double, 2>{0, 0} : c[d - mixed.block_offsets[s]];
      },
      [&](int d) {
        int s = mixed.subspace_of(d);
        return (d - mixed.block_offsets[s]) % mixed.subspaces[s].element.components;
      });
}

}  // namespace patchmg
