#include "patchmg/reference.hpp"

#include <cmath>
#include <stdexcept>

#include "patchmg/linalg.hpp"

namespace patchmg {

void gauss_legendre_01(int n, std::vector<double>& points, std::vector<double>& weights) {
  points.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton from the Chebyshev-like initial guess on [-1,1].
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      if (n == 1) p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      double pn = (n == 1) ? x : p1;
      double pm = (n == 1) ? 1.0 : p0;
      pp = n * (x * pn - pm) / (x * x - 1.0);
      double dx = pn / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    points[n - 1 - i] = 0.5 * (x + 1.0);
    weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * pp * pp);
  }
}

QuadratureRule quadrature(CellShape cell, int degree) {
  if (degree < 0 || degree > 20) throw std::invalid_argument("quadrature: degree out of range");
  QuadratureRule rule;
  rule.exact_degree = degree;
  if (cell == CellShape::quadrilateral) {
    int n = degree / 2 + 1;
    std::vector<double> p, w;
    gauss_legendre_01(n, p, w);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        rule.points.push_back({p[i], p[j]});
        rule.weights.push_back(w[i] * w[j]);
      }
  } else {
    // Collapsed rule via (u,v) -> (u(1-v), v) with Jacobian (1-v).
    int nu = (degree + 2) / 2;          // exact to degree d in u
    int nv = (degree + 3) / 2;          // degree d+1 in v from the Jacobian
    std::vector<double> pu, wu, pv, wv;
    gauss_legendre_01(nu, pu, wu);
    gauss_legendre_01(nv, pv, wv);
    for (int i = 0; i < nu; ++i)
      for (int j = 0; j < nv; ++j) {
        double u = pu[i], v = pv[j];
        rule.points.push_back({u * (1.0 - v), v});
        rule.weights.push_back(wu[i] * wv[j] * (1.0 - v));
      }
  }
  return rule;
}

namespace {

std::vector<ReferenceElement::Monomial> monomial_set(CellShape cell, int k) {
  std::vector<ReferenceElement::Monomial> ms;
  if (cell == CellShape::triangle) {
    for (int d = 0; d <= k; ++d)
      for (int a = d; a >= 0; --a) ms.push_back({a, d - a});
  } else {
    for (int b = 0; b <= k; ++b)
      for (int a = 0; a <= k; ++a) ms.push_back({a, b});
  }
  return ms;
}

double mono_eval(const ReferenceElement::Monomial& m, double x, double y) {
  return std::pow(x, m.px) * std::pow(y, m.py);
}

double mono_dx(const ReferenceElement::Monomial& m, double x, double y) {
  return m.px == 0 ? 0.0 : m.px * std::pow(x, m.px - 1) * std::pow(y, m.py);
}

double mono_dy(const ReferenceElement::Monomial& m, double x, double y) {
  return m.py == 0 ? 0.0 : m.py * std::pow(x, m.px) * std::pow(y, m.py - 1);
}

struct NodeLayout {
  std::vector<std::array<double, 2>> nodes;
  std::array<std::vector<std::vector<int>>, 3> entity_dofs;
};

NodeLayout lagrange_nodes(CellShape cell, int k) {
  NodeLayout L;
  auto add = [&](int dim, int entity, double x, double y) {
    if (static_cast<int>(L.entity_dofs[dim].size()) <= entity)
      L.entity_dofs[dim].resize(entity + 1);
    L.entity_dofs[dim][entity].push_back(static_cast<int>(L.nodes.size()));
    L.nodes.push_back({x, y});
  };
  if (cell == CellShape::triangle) {
    const std::array<std::array<double, 2>, 3> v{{{0, 0}, {1, 0}, {0, 1}}};
    for (int i = 0; i < 3; ++i) add(0, i, v[i][0], v[i][1]);
    for (int e = 0; e < 3; ++e) {
      auto a = v[e], b = v[(e + 1) % 3];
      for (int i = 1; i < k; ++i) {
        double t = static_cast<double>(i) / k;
        add(1, e, a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]));
      }
      if (k == 1) L.entity_dofs[1].resize(3);
    }
    L.entity_dofs[2].resize(1);
    for (int j = 1; j < k; ++j)
      for (int i = 1; i + j < k; ++i)
        add(2, 0, static_cast<double>(i) / k, static_cast<double>(j) / k);
  } else {
    const std::array<std::array<double, 2>, 4> v{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    for (int i = 0; i < 4; ++i) add(0, i, v[i][0], v[i][1]);
    for (int e = 0; e < 4; ++e) {
      auto a = v[e], b = v[(e + 1) % 4];
      for (int i = 1; i < k; ++i) {
        double t = static_cast<double>(i) / k;
        add(1, e, a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]));
      }
      if (k == 1) L.entity_dofs[1].resize(4);
    }
    L.entity_dofs[2].resize(1);
    for (int j = 1; j < k; ++j)
      for (int i = 1; i < k; ++i)
        add(2, 0, static_cast<double>(i) / k, static_cast<double>(j) / k);
  }
  return L;
}

}  // namespace

ReferenceElement lagrange(CellShape cell, int k) {
  const int kmax = cell == CellShape::triangle ? 4 : 2;
  if (k < 1 || k > kmax)
    throw UnsupportedDegreeError("lagrange: degree " + std::to_string(k) + " unsupported");

  ReferenceElement e;
  e.cell = cell;
  e.family = ElementFamily::lagrange;
  e.degree = k;
  e.value_size = 1;
  e.components = 1;
  e.mapping = MappingKind::identity;
  e.monomials = monomial_set(cell, k);

  NodeLayout L = lagrange_nodes(cell, k);
  e.nodes = L.nodes;
  e.entity_dofs = L.entity_dofs;
  e.n_basis = static_cast<int>(L.nodes.size());
  if (e.n_basis != static_cast<int>(e.monomials.size()))
    throw std::logic_error("lagrange: node/monomial count mismatch");

  // Nodal basis from the inverse Vandermonde: basis_i = sum_m C(i,m) mono_m
  // with C = V^{-T}, V_jm = mono_m(node_j).
  const int n = e.n_basis;
  DenseMatrix vand(n, n);
  for (int j = 0; j < n; ++j)
    for (int m = 0; m < n; ++m)
      vand(j, m) = mono_eval(e.monomials[m], L.nodes[j][0], L.nodes[j][1]);
  DenseMatrix inv = invert(vand);
  e.coeffs.resize(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < n; ++m) e.coeffs[i * n + m] = inv(m, i);
  return e;
}

ReferenceElement vector_lagrange(CellShape cell, int k) {
  ReferenceElement e = lagrange(cell, k);
  e.value_size = 2;
  e.components = 2;
  e.n_basis *= 2;
  for (auto& dim : e.entity_dofs)
    for (auto& ent : dim) {
      std::vector<int> expanded;
      for (int s : ent) {
        expanded.push_back(2 * s);
        expanded.push_back(2 * s + 1);
      }
      ent = std::move(expanded);
    }
  return e;
}

namespace {
ReferenceElement edge_element(CellShape cell, ElementFamily family) {
  if (cell != CellShape::triangle)
    throw std::invalid_argument("edge elements are triangle-only");
  ReferenceElement e;
  e.cell = cell;
  e.family = family;
  e.degree = 0;
  e.value_size = 2;
  e.components = 1;
  e.n_basis = 3;
  e.monomials = {{0, 0}, {1, 0}, {0, 1}};
  e.entity_dofs[0] = {{}, {}, {}};
  e.entity_dofs[1] = {{0}, {1}, {2}};
  e.entity_dofs[2] = {{}};
  e.coeffs.resize(9);
  e.coeffs_y.resize(9);
  auto set = [&](int i, std::array<double, 3> cx, std::array<double, 3> cy) {
    for (int m = 0; m < 3; ++m) {
      e.coeffs[i * 3 + m] = cx[m];
      e.coeffs_y[i * 3 + m] = cy[m];
    }
  };
  if (family == ElementFamily::raviart_thomas) {
    e.mapping = MappingKind::contravariant_piola;
    // Unit outward flux through the owning edge, zero through the others.
    set(0, {0, 1, 0}, {-1, 0, 1});   // (x, y-1)
    set(1, {0, 1, 0}, {0, 0, 1});    // (x, y)
    set(2, {-1, 1, 0}, {0, 0, 1});   // (x-1, y)
  } else {
    e.mapping = MappingKind::covariant_piola;
    // 90-degree rotation of the RT0 basis; unit circulation along the edge.
    set(0, {1, 0, -1}, {0, 1, 0});   // (1-y, x)
    set(1, {0, 0, -1}, {0, 1, 0});   // (-y, x)
    set(2, {0, 0, -1}, {-1, 1, 0});  // (-y, x-1)
  }
  return e;
}
}  // namespace

ReferenceElement raviart_thomas_0(CellShape cell) {
  return edge_element(cell, ElementFamily::raviart_thomas);
}

ReferenceElement nedelec_0(CellShape cell) {
  return edge_element(cell, ElementFamily::nedelec_first_kind);
}

std::vector<double> ReferenceElement::tabulate(
    const std::vector<std::array<double, 2>>& points, int deriv) const {
  const int np = static_cast<int>(points.size());
  const size_t stride = static_cast<size_t>(n_basis) * value_size;
  std::vector<double> out(np * stride * (deriv == 0 ? 1 : 2), 0.0);
  const int nm = static_cast<int>(monomials.size());
  const int nscalar = n_scalar_basis();

  for (int p = 0; p < np; ++p) {
    double x = points[p][0], y = points[p][1];
    for (int s = 0; s < nscalar; ++s) {
      // component tables: x table always, y table for intrinsic vector families
      for (int comp_table = 0; comp_table < (coeffs_y.empty() ? 1 : 2); ++comp_table) {
        const auto& C = comp_table == 0 ? coeffs : coeffs_y;
        double val = 0.0, dx = 0.0, dy = 0.0;
        for (int m = 0; m < nm; ++m) {
          double c = C[s * nm + m];
          if (c == 0.0) continue;
          if (deriv == 0)
            val += c * mono_eval(monomials[m], x, y);
          else {
            dx += c * mono_dx(monomials[m], x, y);
            dy += c * mono_dy(monomials[m], x, y);
          }
        }
        if (components == 1) {
          size_t base = (p * stride + static_cast<size_t>(s) * value_size + comp_table);
          if (deriv == 0)
            out[base] = val;
          else {
            out[base * 2] = dx;
            out[base * 2 + 1] = dy;
          }
        } else {
          // vector Lagrange: scalar value goes into component c of dof 2s+c
          for (int c = 0; c < components; ++c) {
            size_t base = (p * stride + static_cast<size_t>(2 * s + c) * value_size + c);
            if (deriv == 0)
              out[base] = val;
            else {
              out[base * 2] = dx;
              out[base * 2 + 1] = dy;
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace patchmg
