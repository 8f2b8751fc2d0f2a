#pragma once

#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "patchmg/reference.hpp"
#include "patchmg/topology.hpp"

namespace patchmg {

/// Per-point dof counts with prefix-sum offsets.
struct Section {
  std::vector<int> count;
  std::vector<int> offset;
  int total = 0;
};

/// Global function space: dof section over mesh points plus signed
/// cell-to-global-dof maps.
struct FunctionSpace {
  const PlexTopology* topology = nullptr;
  const MeshGeometry* geometry = nullptr;
  ReferenceElement element;
  Section section;
  /// cell_dofs[cell][local dof] -> (global dof, sign).
  std::vector<std::vector<std::pair<int, int>>> cell_dofs;

  int total_dofs() const { return section.total; }

  /// Union of the dofs stored on the given points, in ascending point order.
  std::vector<int> dofs_on_points(const std::vector<PointId>& points) const;

  /// Physical coordinate per dof (Lagrange families only).
  std::vector<std::array<double, 2>> dof_coordinates() const;
};

FunctionSpace build_space(const PlexTopology& topo, const MeshGeometry& geom,
                          const ReferenceElement& element);

/// Ordered list of component spaces with block-wise global numbering.
struct MixedSpace {
  std::vector<FunctionSpace> subspaces;
  std::vector<int> block_offsets;

  static MixedSpace build(std::vector<FunctionSpace> spaces);
  int total_dofs() const;
  int subspace_of(int global_dof) const;
};

/// Boundary-part selector for Dirichlet conditions.
struct BoundarySelector {
  enum class Kind { none, all, side } kind = Kind::all;
  // side: axis (0 = x, 1 = y) and coordinate value of the selected boundary.
  int axis = 0;
  double value = 0.0;

  static BoundarySelector all() { return {Kind::all}; }
  static BoundarySelector none() { return {Kind::none}; }
  static BoundarySelector side(int axis, double value) {
    return {Kind::side, axis, value};
  }
};

struct DirichletBC {
  int subspace = 0;
  BoundarySelector selector;
  /// value(x, y, component); zero when absent.
  std::function<double(double, double, int)> value;
};

/// Dofs on the closure of the selected boundary facets.
std::vector<int> dirichlet_dofs(const FunctionSpace& space, const BoundarySelector& sel);
std::vector<int> dirichlet_dofs(const MixedSpace& mixed, const BoundarySelector& sel,
                                int subspace);

/// Constrained dof -> boundary value, resolved over a list of conditions
/// applied in order (later conditions win on overlap).
struct ConstraintSet {
  std::vector<int> dofs;            // ascending
  std::vector<double> values;       // parallel to dofs
  std::vector<char> is_constrained; // size = total dofs

  bool constrained(int dof) const { return !is_constrained.empty() && is_constrained[dof]; }
  double value_of(int dof) const;

  static ConstraintSet build(const FunctionSpace& space, const std::vector<DirichletBC>& bcs);
  static ConstraintSet build(const MixedSpace& mixed, const std::vector<DirichletBC>& bcs);
  static ConstraintSet empty(int total_dofs);
};

}  // namespace patchmg
