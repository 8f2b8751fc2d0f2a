#include "patchmg/krylov.hpp"

#include <cmath>

namespace patchmg {

Nullspace Nullspace::of(std::vector<Vector> vectors) {
  Nullspace ns;
  for (Vector& v : vectors) {
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& u : ns.basis) axpy(-dot(u, v), u, v);
    double n = norm2(v);
    if (n > 1e-12) {
      scale(1.0 / n, v);
      ns.basis.push_back(std::move(v));
    }
  }
  return ns;
}

void Nullspace::project(std::span<double> v) const {
  for (const Vector& u : basis) axpy(-dot(u, v), u, v);
}

SolveReport cg(const SparseMatrix& a, const LinearOperator& prec,
               std::span<const double> b, Vector& x, double rtol, int maxit) {
  SolveReport rep;
  Vector r = a.apply(x);
  for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  Vector z = prec ? prec(r) : r;
  Vector p = z;
  double rho = dot(r, z);
  double res0 = norm2(z);
  rep.residual_history.push_back(res0);
  if (res0 == 0.0) {
    rep.converged = true;
    return rep;
  }

  for (int it = 1; it <= maxit; ++it) {
    Vector ap = a.apply(p);
    double pap = dot(p, ap);
    if (pap <= 0.0) {
      rep.indefinite = true;
      break;
    }
    double alpha = rho / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    z = prec ? prec(r) : r;
    double res = norm2(z);
    rep.residual_history.push_back(res);
    rep.iterations = it;
    if (res <= rtol * res0) {
      rep.converged = true;
      break;
    }
    double rho_new = dot(r, z);
    double beta = rho_new / rho;
    rho = rho_new;
    for (size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  rep.final_relative_residual = rep.residual_history.back() / res0;
  return rep;
}

SolveReport gmres(const SparseMatrix& a, const LinearOperator& prec_right,
                  std::span<const double> b, Vector& x, double rtol, int maxit,
                  int restart, const Nullspace* nullspace) {
  SolveReport rep;
  const int n = a.rows();
  Vector bb(b.begin(), b.end());
  if (nullspace) nullspace->project(bb);

  auto residual_of = [&](const Vector& xx) {
    Vector r = a.apply(xx);
    for (int i = 0; i < n; ++i) r[i] = bb[i] - r[i];
    return r;
  };

  Vector r = residual_of(x);
  double res0 = norm2(r);
  rep.residual_history.push_back(res0);
  if (res0 == 0.0) {
    rep.converged = true;
    return rep;
  }

  int it = 0;
  while (it < maxit && !rep.converged) {
    double beta = norm2(r);
    const int m = restart;
    std::vector<Vector> v(1, r);
    scale(1.0 / beta, v[0]);
    std::vector<Vector> z;                       // preconditioned directions
    std::vector<std::vector<double>> h;          // h[j]: column j, length j+2
    std::vector<double> cs, sn;                  // Givens rotations
    Vector g(1, beta);

    int k = 0;
    for (int j = 0; j < m && it < maxit; ++j) {
      Vector w = prec_right ? prec_right(v[j]) : v[j];
      if (nullspace) nullspace->project(w);
      z.push_back(w);
      Vector t = a.apply(z.back());
      std::vector<double> col(j + 2, 0.0);
      for (int i = 0; i <= j; ++i) {
        col[i] = dot(t, v[i]);
        axpy(-col[i], v[i], t);
      }
      col[j + 1] = norm2(t);
      bool breakdown = col[j + 1] < 1e-14 * beta;
      if (!breakdown) {
        Vector vn = t;
        scale(1.0 / col[j + 1], vn);
        v.push_back(std::move(vn));
      }
      // apply accumulated rotations, then eliminate the subdiagonal entry
      for (int i = 0; i < j; ++i) {
        double tmp = cs[i] * col[i] + sn[i] * col[i + 1];
        col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
        col[i] = tmp;
      }
      double denom = std::hypot(col[j], col[j + 1]);
      double c = denom == 0.0 ? 1.0 : col[j] / denom;
      double s = denom == 0.0 ? 0.0 : col[j + 1] / denom;
      cs.push_back(c);
      sn.push_back(s);
      col[j] = denom;
      col[j + 1] = 0.0;
      h.push_back(std::move(col));
      g.push_back(-s * g[j]);
      g[j] = c * g[j];

      ++it;
      ++k;
      double res = std::abs(g[j + 1]);
      rep.residual_history.push_back(res);
      rep.iterations = it;
      if (res <= rtol * res0) {
        rep.converged = true;
        break;
      }
      if (breakdown) break;
    }

    // y from the k x k triangular system, x += Z y
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h[j][i] * y[j];
      y[i] = s / h[i][i];
    }
    for (int i = 0; i < k; ++i) axpy(y[i], z[i], x);
    if (nullspace) nullspace->project(x);

    double prev = beta;
    r = residual_of(x);
    if (!rep.converged && norm2(r) >= prev * (1.0 - 1e-12)) {
      rep.stagnated = true;
      break;
    }
  }
  rep.final_relative_residual = norm2(residual_of(x)) / res0;
  return rep;
}

SolveReport richardson(const SparseMatrix& a, const LinearOperator& prec,
                       std::span<const double> b, Vector& x, double scale_factor,
                       double rtol, int maxit) {
  SolveReport rep;
  Vector r = a.apply(x);
  for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  double res0 = norm2(r);
  rep.residual_history.push_back(res0);
  if (res0 == 0.0) {
    rep.converged = true;
    return rep;
  }
  for (int it = 1; it <= maxit; ++it) {
    Vector d = prec ? prec(r) : r;
    axpy(scale_factor, d, x);
    r = a.apply(x);
    for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    double res = norm2(r);
    rep.residual_history.push_back(res);
    rep.iterations = it;
    if (res <= rtol * res0) {
      rep.converged = true;
      break;
    }
  }
  rep.final_relative_residual = rep.residual_history.back() / res0;
  return rep;
}

}  // namespace patchmg
