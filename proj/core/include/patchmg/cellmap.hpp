#pragma once

#include <array>

#include "patchmg/space.hpp"

namespace patchmg {

/// Reference-to-physical map of one cell (affine on triangles, bilinear on
/// quadrilaterals).
struct CellMap {
  CellShape shape;
  std::array<std::array<double, 2>, 4> v{};  // physical vertices, ccw

  static CellMap from(const PlexTopology& topo, const MeshGeometry& geom, PointId cell);

  std::array<double, 2> to_physical(double x, double y) const;
  /// Jacobian dF/dxhat at the reference point; constant for triangles.
  std::array<std::array<double, 2>, 2> jacobian(double x, double y) const;
  /// Reference coordinates of a physical point (Newton for quads).
  std::array<double, 2> to_reference(std::array<double, 2> p) const;
};

inline double det2(const std::array<std::array<double, 2>, 2>& j) {
  return j[0][0] * j[1][1] - j[0][1] * j[1][0];
}

inline std::array<std::array<double, 2>, 2> inv2(const std::array<std::array<double, 2>, 2>& j) {
  double d = det2(j);
  return {{{j[1][1] / d, -j[0][1] / d}, {-j[1][0] / d, j[0][0] / d}}};
}

}  // namespace patchmg
