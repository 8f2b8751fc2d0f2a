#include "patchmg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <tuple>

namespace patchmg {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double s, std::span<const double> x, std::span<double> y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

void scale(double s, std::span<double> x) {
  for (double& v : x) v *= s;
}

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<int> row_offsets,
                           std::vector<int> col_indices, std::vector<double> values)
    : rows_(rows), cols_(cols), row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)), values_(std::move(values)) {
  if (static_cast<int>(row_offsets_.size()) != rows_ + 1)
    throw std::invalid_argument("SparseMatrix: bad row offsets");
}

SparseMatrix SparseMatrix::from_triplets(
    int rows, int cols, std::vector<std::tuple<int, int, double>> triplets) {
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const auto& a, const auto& b) {
                     return std::tie(std::get<0>(a), std::get<1>(a)) <
                            std::tie(std::get<0>(b), std::get<1>(b));
                   });
  std::vector<int> offs(rows + 1, 0), cols_idx;
  std::vector<double> vals;
  cols_idx.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (size_t i = 0; i < triplets.size();) {
    auto [r, c, v] = triplets[i];
    double sum = v;
    size_t j = i + 1;
    while (j < triplets.size() && std::get<0>(triplets[j]) == r &&
           std::get<1>(triplets[j]) == c) {
      sum += std::get<2>(triplets[j]);
      ++j;
    }
    cols_idx.push_back(c);
    vals.push_back(sum);
    offs[r + 1]++;
    i = j;
  }
  for (int r = 0; r < rows; ++r) offs[r + 1] += offs[r];
  return SparseMatrix(rows, cols, std::move(offs), std::move(cols_idx), std::move(vals));
}

void SparseMatrix::apply(std::span<const double> x, std::span<double> y) const {
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      s += values_[k] * x[col_indices_[k]];
    y[r] = s;
  }
}

Vector SparseMatrix::apply(std::span<const double> x) const {
  Vector y(rows_);
  apply(x, y);
  return y;
}

double SparseMatrix::entry(int r, int c) const {
  for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
    if (col_indices_[k] == c) return values_[k];
  return 0.0;
}

Vector DenseMatrix::apply(std::span<const double> x) const {
  Vector y(rows_, 0.0);
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    const double* row = data_.data() + static_cast<size_t>(r) * cols_;
    for (int c = 0; c < cols_; ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

DenseMatrix DenseMatrix::from_sparse(const SparseMatrix& a) {
  DenseMatrix d(a.rows(), a.cols());
  auto offs = a.row_offsets();
  auto cols = a.col_indices();
  auto vals = a.values();
  for (int r = 0; r < a.rows(); ++r)
    for (int k = offs[r]; k < offs[r + 1]; ++k) d(r, cols[k]) += vals[k];
  return d;
}

LuFactors LuFactors::factor(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("lu_factor: matrix not square");
  const int n = a.rows();
  LuFactors f;
  f.lu_ = a;
  f.pivots_.resize(n);
  // Pivot tolerance relative to the infinity norm of A.
  double anorm = 0.0;
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += std::abs(a(r, c));
    anorm = std::max(anorm, s);
  }
  const double tol = 1e-14 * std::max(anorm, 1.0);
  auto& lu = f.lu_;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(lu(r, k)) > std::abs(lu(p, k))) p = r;
    if (std::abs(lu(p, k)) <= tol)
      throw SingularMatrixError("lu_factor: pivot below tolerance at column " +
                                std::to_string(k));
    f.pivots_[k] = p;
    if (p != k)
      for (int c = 0; c < n; ++c) std::swap(lu(k, c), lu(p, c));
    const double inv = 1.0 / lu(k, k);
    for (int r = k + 1; r < n; ++r) {
      const double m = lu(r, k) * inv;
      lu(r, k) = m;
      if (m != 0.0)
        for (int c = k + 1; c < n; ++c) lu(r, c) -= m * lu(k, c);
    }
  }
  return f;
}

Vector LuFactors::solve(std::span<const double> b) const {
  const int n = lu_.rows();
  Vector x(b.begin(), b.end());
  // The factors store L with fully swapped rows, so permute b up front.
  for (int k = 0; k < n; ++k)
    if (pivots_[k] != k) std::swap(x[k], x[pivots_[k]]);
  for (int k = 0; k < n; ++k)
    for (int r = k + 1; r < n; ++r) x[r] -= lu_(r, k) * x[k];
  for (int k = n - 1; k >= 0; --k) {
    for (int c = k + 1; c < n; ++c) x[k] -= lu_(k, c) * x[c];
    x[k] /= lu_(k, k);
  }
  return x;
}

DenseMatrix invert(const DenseMatrix& a) {
  const int n = a.rows();
  LuFactors f = LuFactors::factor(a);
  DenseMatrix inv(n, n);
  Vector e(n, 0.0);
  for (int c = 0; c < n; ++c) {
    e[c] = 1.0;
    Vector col = f.solve(e);
    e[c] = 0.0;
    for (int r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  return inv;
}

namespace {

// Eigenvalue count of (T - x I) below x via the Sturm sequence of a symmetric
// tridiagonal matrix with diagonal d and off-diagonal e.
int sturm_count(const std::vector<double>& d, const std::vector<double>& e, double x) {
  int count = 0;
  double q = 1.0;
  const int n = static_cast<int>(d.size());
  for (int i = 0; i < n; ++i) {
    double off = (i == 0) ? 0.0 : e[i - 1];
    q = d[i] - x - (q == 0.0 ? std::abs(off) / 1e-300 : off * off / q);
    if (q < 0.0) ++count;
  }
  return count;
}

double tridiag_eig_k(const std::vector<double>& d, const std::vector<double>& e, int k) {
  // Gershgorin bracket.
  double lo = d[0], hi = d[0];
  const int n = static_cast<int>(d.size());
  for (int i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(e[i - 1]);
    if (i + 1 < n) r += std::abs(e[i]);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi) + std::abs(lo)); ++it) {
    double mid = 0.5 * (lo + hi);
    if (sturm_count(d, e, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

LanczosResult lanczos_extremes(const LinearOperator& apply_t, int dim, int iters,
                               const LinearOperator& inner_product) {
  if (iters < 2) throw std::invalid_argument("lanczos_extremes: iters must be >= 2");
  LanczosResult res;
  auto ip = [&](std::span<const double> a, std::span<const double> b) {
    if (!inner_product) return dot(a, b);
    Vector mb = inner_product(b);
    return dot(a, mb);
  };

  Vector v(dim, 0.0);
  // Fixed deterministic start vector.
  for (int i = 0; i < dim; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + i);
  double nv = std::sqrt(ip(v, v));
  scale(1.0 / nv, v);

  std::vector<Vector> basis;
  std::vector<double> alpha, beta;
  Vector w;
  const int maxit = std::min(iters, dim);
  for (int j = 0; j < maxit; ++j) {
    basis.push_back(v);
    w = apply_t(v);
    double a = ip(w, v);
    alpha.push_back(a);
    // Full reorthogonalization; subspaces are small.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) {
        double c = ip(w, q);
        axpy(-c, q, w);
      }
    double b = std::sqrt(std::max(ip(w, w), 0.0));
    res.iterations = j + 1;
    if (j + 1 == maxit) break;
    if (b < 1e-13 * (std::abs(a) + 1.0)) {
      res.breakdown = true;
      break;
    }
    beta.push_back(b);
    v = w;
    scale(1.0 / b, v);
  }

  const int m = static_cast<int>(alpha.size());
  if (m == 1) {
    res.lambda_min = res.lambda_max = alpha[0];
    return res;
  }
  std::vector<double> e(beta.begin(), beta.begin() + (m - 1));
  res.lambda_min = tridiag_eig_k(alpha, e, 0);
  res.lambda_max = tridiag_eig_k(alpha, e, m - 1);
  return res;
}

namespace {

using Complex = std::complex<double>;

// Eigenvalues of a small upper Hessenberg matrix by single-shift QR iteration
// in complex arithmetic (handles complex-conjugate pairs without the double
// shift machinery).
std::vector<Complex> hessenberg_eigenvalues(std::vector<std::vector<Complex>> h) {
  const int n = static_cast<int>(h.size());
  std::vector<Complex> eigs;
  int m = n - 1;
  int guard = 0;
  while (m >= 0) {
    if (m == 0) {
      eigs.push_back(h[0][0]);
      break;
    }
    const double small =
        1e-13 * (std::abs(h[m][m]) + std::abs(h[m - 1][m - 1])) + 1e-300;
    if (std::abs(h[m][m - 1]) <= small) {
      eigs.push_back(h[m][m]);
      --m;
      continue;
    }
    if (++guard > 500 * n) {
      for (int i = 0; i <= m; ++i) eigs.push_back(h[i][i]);
      break;
    }
    // Wilkinson shift: eigenvalue of the trailing 2x2 closest to h[m][m].
    Complex a = h[m - 1][m - 1], b = h[m - 1][m], c = h[m][m - 1], d = h[m][m];
    Complex tr = a + d;
    Complex disc = std::sqrt(tr * tr - 4.0 * (a * d - b * c));
    Complex l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
    Complex mu = (std::abs(l1 - d) < std::abs(l2 - d)) ? l1 : l2;

    for (int i = 0; i <= m; ++i) h[i][i] -= mu;
    // QR step via Givens rotations on the active block 0..m.
    std::vector<double> cs(m);
    std::vector<Complex> sn(m);
    for (int k = 0; k < m; ++k) {
      Complex f = h[k][k], g = h[k + 1][k];
      double r = std::hypot(std::abs(f), std::abs(g));
      if (r == 0.0) {
        cs[k] = 1.0;
        sn[k] = 0.0;
        continue;
      }
      double af = std::abs(f);
      cs[k] = af / r;
      sn[k] = (af == 0.0) ? Complex(1.0, 0.0) : (f / af) * std::conj(g) / r;
      for (int j = k; j <= m; ++j) {
        Complex t1 = h[k][j], t2 = h[k + 1][j];
        h[k][j] = cs[k] * t1 + sn[k] * t2;
        h[k + 1][j] = -std::conj(sn[k]) * t1 + cs[k] * t2;
      }
    }
    for (int k = 0; k < m; ++k) {
      int top = std::min(k + 2, m);
      for (int i = 0; i <= top; ++i) {
        Complex t1 = h[i][k], t2 = h[i][k + 1];
        h[i][k] = cs[k] * t1 + std::conj(sn[k]) * t2;
        h[i][k + 1] = -sn[k] * t1 + cs[k] * t2;
      }
    }
    for (int i = 0; i <= m; ++i) h[i][i] += mu;
  }
  return eigs;
}

}  // namespace

SpectrumEstimate arnoldi_extremes(const LinearOperator& apply_t, int dim, int iters) {
  if (iters < 2) throw std::invalid_argument("arnoldi_extremes: iters must be >= 2");
  SpectrumEstimate res;

  Vector v(dim, 0.0);
  for (int i = 0; i < dim; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + i);
  scale(1.0 / norm2(v), v);

  const int maxit = std::min(iters, dim);
  std::vector<Vector> basis;
  std::vector<std::vector<double>> hess(maxit + 1, std::vector<double>(maxit, 0.0));
  int m = 0;
  for (int j = 0; j < maxit; ++j) {
    basis.push_back(v);
    Vector w = apply_t(v);
    // Modified Gram-Schmidt with one reorthogonalization pass.
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        double c = dot(w, basis[i]);
        hess[i][j] += c;
        axpy(-c, basis[i], w);
      }
    double b = norm2(w);
    m = j + 1;
    if (j + 1 == maxit) break;
    if (b < 1e-13 * (std::abs(hess[j][j]) + 1.0)) break;
    hess[j + 1][j] = b;
    v = w;
    scale(1.0 / b, v);
  }
  res.iterations = m;

  std::vector<std::vector<Complex>> h(m, std::vector<Complex>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) h[i][j] = hess[i][j];
  std::vector<Complex> eigs = hessenberg_eigenvalues(std::move(h));
  res.min_real = eigs[0].real();
  res.max_real = eigs[0].real();
  for (const Complex& e : eigs) {
    res.min_real = std::min(res.min_real, e.real());
    res.max_real = std::max(res.max_real, e.real());
  }
  return res;
}

}  // namespace patchmg
