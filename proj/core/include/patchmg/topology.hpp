#pragma once

#include <array>
#include <string>
#include <vector>

namespace patchmg {

enum class CellShape { triangle, quadrilateral };

using PointId = int;

/// Half-open range of point ids making up one stratum of the Hasse diagram.
struct Stratum {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool contains(PointId p) const { return p >= begin && p < end; }
};

/// Mesh incidence structure over cells, vertices and edges.
///
/// Point numbering: cells first, then vertices, then edges. Cones list the
/// boundary points of each point (edges of a cell in traversal order, the two
/// endpoint vertices of an edge from lower to higher vertex id); supports are
/// the inverse relation. Cone orientations record, per cell cone entry,
/// whether the cell traverses the edge along its stored direction (+1) or
/// against it (-1).
class PlexTopology {
public:
  /// Assemble from counterclockwise per-cell vertex lists. Vertex ids in the
  /// lists are 0-based and are shifted behind the cell stratum; edges are
  /// discovered in cell-loop order.
  static PlexTopology from_cells(CellShape shape, int num_vertices,
                                 const std::vector<std::vector<int>>& cell_vertices);

  int num_points() const { return num_points_; }
  CellShape cell_shape() const { return shape_; }
  const Stratum& stratum(int dim) const;
  /// Ordered point-id range for one dimension.
  Stratum entities(int dim) const { return stratum(dim); }

  int num_cells() const { return strata_[2].size(); }
  int num_vertices() const { return strata_[0].size(); }
  int num_edges() const { return strata_[1].size(); }

  int dim_of(PointId p) const;

  const std::vector<PointId>& cone(PointId p) const;
  const std::vector<int>& cone_orientation(PointId p) const;
  const std::vector<PointId>& support(PointId p) const;

  /// Transitive closure under cone; sorted, contains the input.
  std::vector<PointId> closure(const std::vector<PointId>& points) const;
  /// Transitive closure under support; sorted, contains the input.
  std::vector<PointId> star(const std::vector<PointId>& points) const;

  /// Vertices of a cell in traversal (counterclockwise) order.
  std::vector<PointId> cell_vertices(PointId cell) const;

private:
  void check_point(PointId p) const;

  CellShape shape_ = CellShape::triangle;
  int num_points_ = 0;
  std::array<Stratum, 3> strata_;  // indexed by dimension
  std::vector<std::vector<PointId>> cones_;
  std::vector<std::vector<int>> cone_orient_;
  std::vector<std::vector<PointId>> supports_;
};

struct MeshGeometry {
  /// One (x, y) coordinate per dim-0 point, indexed by vertex number
  /// (point id minus the vertex stratum offset).
  std::vector<std::array<double, 2>> coordinates;
};

/// Child/parent correspondence produced by uniform refinement.
struct RefinementMap {
  /// Per fine point: coarse point it subdivides or lies interior to.
  std::vector<PointId> parent;
  /// Per coarse point: fine points it generates.
  std::vector<std::vector<PointId>> children;
};

struct Mesh {
  PlexTopology topology;
  MeshGeometry geometry;
};

/// Structured mesh of an axis-aligned box. Triangle meshes split each grid
/// square along the lower-left to upper-right diagonal.
Mesh build_structured(int nx, int ny, CellShape shape,
                      std::array<double, 2> extent = {1.0, 1.0});

struct RefinedMesh {
  PlexTopology topology;
  MeshGeometry geometry;
  RefinementMap map;
};

/// Edge-midpoint subdivision: each triangle into 4 congruent triangles, each
/// quadrilateral into 4 via edge midpoints and the centroid.
RefinedMesh uniform_refine(const PlexTopology& topo, const MeshGeometry& geom);

}  // namespace patchmg
