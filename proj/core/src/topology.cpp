#include "patchmg/topology.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace patchmg {

PlexTopology PlexTopology::from_cells(CellShape shape, int num_vertices,
                                      const std::vector<std::vector<int>>& cell_vertices) {
  const int verts_per_cell = shape == CellShape::triangle ? 3 : 4;
  const int ncells = static_cast<int>(cell_vertices.size());

  // Edges keyed by (min vertex, max vertex); stored cone direction is from
  // the lower to the higher vertex id. Numbered in cell-loop discovery order.
  std::map<std::pair<int, int>, int> edge_ids;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> cell_edges(ncells), cell_orient(ncells);

  for (int c = 0; c < ncells; ++c) {
    const auto& vs = cell_vertices[c];
    if (static_cast<int>(vs.size()) != verts_per_cell)
      throw std::invalid_argument("from_cells: wrong cell vertex count");
    for (int k = 0; k < verts_per_cell; ++k) {
      int a = vs[k], b = vs[(k + 1) % verts_per_cell];
      auto key = std::minmax(a, b);
      auto [it, inserted] = edge_ids.try_emplace(key, static_cast<int>(edges.size()));
      if (inserted) edges.push_back(key);
      cell_edges[c].push_back(it->second);
      cell_orient[c].push_back(a < b ? +1 : -1);
    }
  }

  const int nedges = static_cast<int>(edges.size());
  PlexTopology t;
  t.shape_ = shape;
  t.strata_[2] = {0, ncells};
  t.strata_[0] = {ncells, ncells + num_vertices};
  t.strata_[1] = {ncells + num_vertices, ncells + num_vertices + nedges};
  t.num_points_ = ncells + num_vertices + nedges;
  t.cones_.resize(t.num_points_);
  t.cone_orient_.resize(t.num_points_);
  t.supports_.resize(t.num_points_);

  const int voff = ncells, eoff = ncells + num_vertices;
  for (int c = 0; c < ncells; ++c) {
    for (int k = 0; k < verts_per_cell; ++k) {
      t.cones_[c].push_back(eoff + cell_edges[c][k]);
      t.cone_orient_[c].push_back(cell_orient[c][k]);
    }
  }
  for (int e = 0; e < nedges; ++e) {
    t.cones_[eoff + e] = {voff + edges[e].first, voff + edges[e].second};
    t.cone_orient_[eoff + e] = {+1, +1};
  }
  for (int p = 0; p < t.num_points_; ++p)
    for (PointId q : t.cones_[p]) t.supports_[q].push_back(p);
  return t;
}

const Stratum& PlexTopology::stratum(int dim) const {
  if (dim < 0 || dim > 2) throw std::invalid_argument("stratum: dim out of range");
  return strata_[dim];
}

int PlexTopology::dim_of(PointId p) const {
  check_point(p);
  for (int d = 0; d < 3; ++d)
    if (strata_[d].contains(p)) return d;
  throw std::logic_error("dim_of: strata do not cover point");
}

void PlexTopology::check_point(PointId p) const {
  if (p < 0 || p >= num_points_)
    throw std::invalid_argument("point id " + std::to_string(p) + " out of range");
}

const std::vector<PointId>& PlexTopology::cone(PointId p) const {
  check_point(p);
  return cones_[p];
}

const std::vector<int>& PlexTopology::cone_orientation(PointId p) const {
  check_point(p);
  return cone_orient_[p];
}

const std::vector<PointId>& PlexTopology::support(PointId p) const {
  check_point(p);
  return supports_[p];
}

namespace {
std::vector<PointId> transitive(const PlexTopology& t, const std::vector<PointId>& seed,
                                const std::vector<PointId>& (PlexTopology::*next)(PointId) const) {
  std::vector<char> seen(t.num_points(), 0);
  std::vector<PointId> work;
  for (PointId p : seed) {
    if (p < 0 || p >= t.num_points())
      throw std::invalid_argument("point id out of range");
    if (!seen[p]) {
      seen[p] = 1;
      work.push_back(p);
    }
  }
  for (size_t i = 0; i < work.size(); ++i)
    for (PointId q : (t.*next)(work[i]))
      if (!seen[q]) {
        seen[q] = 1;
        work.push_back(q);
      }
  std::sort(work.begin(), work.end());
  return work;
}
}  // namespace

std::vector<PointId> PlexTopology::closure(const std::vector<PointId>& points) const {
  return transitive(*this, points, &PlexTopology::cone);
}

std::vector<PointId> PlexTopology::star(const std::vector<PointId>& points) const {
  return transitive(*this, points, &PlexTopology::support);
}

std::vector<PointId> PlexTopology::cell_vertices(PointId cell) const {
  check_point(cell);
  if (!strata_[2].contains(cell)) throw std::invalid_argument("cell_vertices: not a cell");
  std::vector<PointId> vs;
  const auto& edges = cones_[cell];
  const auto& orient = cone_orient_[cell];
  for (size_t k = 0; k < edges.size(); ++k) {
    const auto& ev = cones_[edges[k]];
    vs.push_back(orient[k] > 0 ? ev[0] : ev[1]);
  }
  return vs;
}

Mesh build_structured(int nx, int ny, CellShape shape, std::array<double, 2> extent) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_structured: nx, ny must be >= 1");
  const int nvx = nx + 1, nvy = ny + 1;
  auto vid = [&](int i, int j) { return j * nvx + i; };

  std::vector<std::vector<int>> cells;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      if (shape == CellShape::triangle) {
        cells.push_back({a, b, c});
        cells.push_back({a, c, d});
      } else {
        cells.push_back({a, b, c, d});
      }
    }

  Mesh m{PlexTopology::from_cells(shape, nvx * nvy, cells), {}};
  m.geometry.coordinates.resize(nvx * nvy);
  for (int j = 0; j < nvy; ++j)
    for (int i = 0; i < nvx; ++i)
      m.geometry.coordinates[vid(i, j)] = {extent[0] * i / nx, extent[1] * j / ny};
  return m;
}

RefinedMesh uniform_refine(const PlexTopology& topo, const MeshGeometry& geom) {
  const int ncells = topo.num_cells();
  const int nverts = topo.num_vertices();
  const int nedges = topo.num_edges();
  const bool tri = topo.cell_shape() == CellShape::triangle;
  const int voff = topo.stratum(0).begin;
  const int eoff = topo.stratum(1).begin;

  // Fine vertex layout: coarse vertices, then edge midpoints, then (quads)
  // cell centroids.
  const int f_nverts = nverts + nedges + (tri ? 0 : ncells);
  MeshGeometry fgeom;
  fgeom.coordinates.resize(f_nverts);
  for (int v = 0; v < nverts; ++v) fgeom.coordinates[v] = geom.coordinates[v];
  for (int e = 0; e < nedges; ++e) {
    const auto& ev = topo.cone(eoff + e);
    auto a = geom.coordinates[ev[0] - voff], b = geom.coordinates[ev[1] - voff];
    fgeom.coordinates[nverts + e] = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
  }
  auto midpoint_of = [&](PointId edge) { return nverts + (edge - eoff); };

  std::vector<std::vector<int>> fcells;
  for (int c = 0; c < ncells; ++c) {
    auto vs = topo.cell_vertices(c);
    const auto& es = topo.cone(c);
    if (tri) {
      int a = vs[0] - voff, b = vs[1] - voff, cc = vs[2] - voff;
      int mab = midpoint_of(es[0]), mbc = midpoint_of(es[1]), mca = midpoint_of(es[2]);
      fcells.push_back({a, mab, mca});
      fcells.push_back({mab, b, mbc});
      fcells.push_back({mca, mbc, cc});
      fcells.push_back({mab, mbc, mca});
    } else {
      int a = vs[0] - voff, b = vs[1] - voff, cc = vs[2] - voff, d = vs[3] - voff;
      int mab = midpoint_of(es[0]), mbc = midpoint_of(es[1]);
      int mcd = midpoint_of(es[2]), mda = midpoint_of(es[3]);
      int o = nverts + nedges + c;
      auto& pa = geom.coordinates[a];
      auto& pc = geom.coordinates[cc];
      auto& pb = geom.coordinates[b];
      auto& pd = geom.coordinates[d];
      fgeom.coordinates[o] = {0.25 * (pa[0] + pb[0] + pc[0] + pd[0]),
                              0.25 * (pa[1] + pb[1] + pc[1] + pd[1])};
      fcells.push_back({a, mab, o, mda});
      fcells.push_back({mab, b, mbc, o});
      fcells.push_back({o, mbc, cc, mcd});
      fcells.push_back({mda, o, mcd, d});
    }
  }

  RefinedMesh out{PlexTopology::from_cells(topo.cell_shape(), f_nverts, fcells), std::move(fgeom), {}};
  const PlexTopology& ft = out.topology;

  // Parent assignment. Fine cells: 4 per coarse cell in emission order.
  RefinementMap& map = out.map;
  map.parent.assign(ft.num_points(), -1);
  map.children.assign(topo.num_points(), {});
  auto set_parent = [&](PointId fine, PointId coarse) {
    map.parent[fine] = coarse;
    map.children[coarse].push_back(fine);
  };

  for (int fc = 0; fc < ft.num_cells(); ++fc) set_parent(fc, fc / 4);

  const int f_voff = ft.stratum(0).begin;
  // Fine vertex v: coarse vertex copy, edge midpoint, or quad centroid.
  for (int v = 0; v < f_nverts; ++v) {
    PointId fine = f_voff + v;
    if (v < nverts)
      set_parent(fine, voff + v);
    else if (v < nverts + nedges)
      set_parent(fine, eoff + (v - nverts));
    else
      set_parent(fine, v - nverts - nedges);
  }

  // Fine edge classification by endpoint kinds: a half edge joins a coarse
  // vertex copy and the midpoint of a coarse edge incident to it; everything
  // else lies interior to a coarse cell.
  const int f_eoff = ft.stratum(1).begin;
  for (int e = 0; e < ft.num_edges(); ++e) {
    PointId fine = f_eoff + e;
    const auto& ev = ft.cone(fine);
    int a = ev[0] - f_voff, b = ev[1] - f_voff;
    if (b < a) std::swap(a, b);
    PointId coarse = -1;
    if (a < nverts && b >= nverts && b < nverts + nedges) {
      PointId cedge = eoff + (b - nverts);
      const auto& cev = topo.cone(cedge);
      if (cev[0] == voff + a || cev[1] == voff + a) coarse = cedge;
    }
    if (coarse < 0) {
      // Interior edge: find the unique coarse cell via a supporting fine cell.
      coarse = map.parent[ft.support(fine)[0]];
    }
    set_parent(fine, coarse);
  }
  return out;
}

}  // namespace patchmg
