#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "patchmg/topology.hpp"

namespace patchmg {

enum class ElementFamily { lagrange, raviart_thomas, nedelec_first_kind };
enum class MappingKind { identity, contravariant_piola, covariant_piola };

struct UnsupportedDegreeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Tabulated reference element. The reference triangle is {x,y >= 0,
/// x + y <= 1} with vertices (0,0), (1,0), (0,1); the reference square is
/// [0,1]^2 with counterclockwise vertices. Local edges follow the boundary
/// traversal: edge k runs from vertex k to vertex k+1.
class ReferenceElement {
public:
  CellShape cell;
  ElementFamily family;
  int degree = 1;
  int value_size = 1;   // 1 scalar, 2 vector
  int components = 1;   // dof copies per geometric node (vector Lagrange: 2)
  int n_basis = 0;
  MappingKind mapping = MappingKind::identity;

  /// entity_dofs[dim][local entity] -> local dof indices, edge dofs ordered
  /// along the edge traversal.
  std::array<std::vector<std::vector<int>>, 3> entity_dofs;

  /// Scalar node coordinates (Lagrange families only); dof = node*components + c.
  std::vector<std::array<double, 2>> nodes;

  int n_scalar_basis() const { return n_basis / components; }

  /// Basis values at reference points. Layout:
  /// deriv 0: out[(p*n_basis + i)*value_size + c]
  /// deriv 1: out[((p*n_basis + i)*value_size + c)*2 + d]
  std::vector<double> tabulate(const std::vector<std::array<double, 2>>& points,
                               int deriv) const;

  // Monomial representation of the scalar basis (Lagrange) or the closed-form
  // vector basis (RT0/Ned0); internal but exposed for tests.
  struct Monomial {
    int px, py;
  };
  std::vector<Monomial> monomials;
  // coeffs[i*n_mono + m] per scalar basis function; for vector families the
  // two components are stored as separate coefficient tables.
  std::vector<double> coeffs;
  std::vector<double> coeffs_y;  // second component (RT0/Ned0 only)
};

/// Scalar Lagrange element with equispaced nodes; k in [1,4] on triangles,
/// [1,2] on quadrilaterals.
ReferenceElement lagrange(CellShape cell, int k);

/// Two-component Lagrange element; dofs interleaved per node (x then y).
ReferenceElement vector_lagrange(CellShape cell, int k);

/// Lowest-order Raviart-Thomas on the triangle: one normal-flux dof per edge,
/// contravariant Piola mapping.
ReferenceElement raviart_thomas_0(CellShape cell);

/// Lowest-order Nedelec (first kind) on the triangle: one tangential
/// circulation dof per edge, covariant Piola mapping. In 2D the basis is the
/// 90-degree rotation of the RT0 basis.
ReferenceElement nedelec_0(CellShape cell);

struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int exact_degree = 0;
};

/// Rule exact for polynomials up to `degree`; triangles use collapsed
/// tensor-product Gauss rules.
QuadratureRule quadrature(CellShape cell, int degree);

/// Gauss-Legendre rule on [0,1].
void gauss_legendre_01(int n, std::vector<double>& points, std::vector<double>& weights);

}  // namespace patchmg
