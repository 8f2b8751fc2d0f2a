#pragma once

#include <functional>
#include <unordered_map>
#include <variant>

#include "patchmg/linalg.hpp"
#include "patchmg/space.hpp"

namespace patchmg {

enum class FormKind {
  mass,
  stiffness,
  hdiv_riesz,   // (u,v) + alpha (div u, div v)
  hcurl_riesz,  // (u,v) + alpha (curl u, curl v), scalar 2D curl
  elasticity,   // mu (E(u),E(v)) + gamma (div u, div v)
  stokes,       // 2 nu (E(u),E(v)) - (p, div v) - (q, div u)
  allen_cahn,   // F(u;v) = (grad u, grad v) + (u^3 - u - f, v)
};

struct FormDescriptor {
  FormKind kind = FormKind::mass;
  double alpha = 1.0;
  double mu = 1.0;
  double gamma = 1.0;
  double nu = 1.0;
  /// Forcing; fills value_size components at (x, y). Zero when absent.
  std::function<void(double, double, double*)> rhs;
  /// Quadrature degree override; default derived from the element degree.
  int quad_degree = -1;

  bool nonlinear() const { return kind == FormKind::allen_cahn; }
  bool symmetric() const { return kind != FormKind::allen_cahn; }
};

struct AssembledSystem {
  SparseMatrix matrix;
  Vector rhs;
  ConstraintSet constraints;
};

/// Either a plain or a mixed space; forms operate on both.
using SpaceRef = std::variant<const FunctionSpace*, const MixedSpace*>;

int total_dofs(const SpaceRef& space);

/// Global dof <-> dense local index map for patch-restricted assembly.
/// Global dofs absent from the map act as zero-valued Dirichlet.
struct Numbering {
  std::vector<int> global;               // local -> global
  std::unordered_map<int, int> local;    // global -> local

  static Numbering of(std::vector<int> dofs);
  int size() const { return static_cast<int>(global.size()); }
  int local_of(int g) const {
    auto it = local.find(g);
    return it == local.end() ? -1 : it->second;
  }
};

/// Read access to (part of) a global state vector during local assembly.
using StateAccessor = std::function<double(int global_dof)>;

AssembledSystem assemble_global(const FormDescriptor& form, const SpaceRef& space,
                                const std::vector<DirichletBC>& bcs,
                                const Vector* state = nullptr);

struct LocalSystem {
  DenseMatrix matrix;  // rows x cols
  Vector residual;     // over rows; only filled for nonlinear forms with state
};

/// Sum of element contributions over the given cells only, restricted to the
/// row/column numberings.
LocalSystem assemble_cells(const FormDescriptor& form, const SpaceRef& space,
                           const std::vector<PointId>& cells, const Numbering& rows,
                           const Numbering& cols, const StateAccessor& state = nullptr);

/// Global nonlinear residual; constrained entries are zeroed.
Vector residual(const FormDescriptor& form, const SpaceRef& space, const Vector& state,
                const ConstraintSet& constraints);

}  // namespace patchmg
