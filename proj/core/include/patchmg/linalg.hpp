#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace patchmg {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
// y += s*x
void axpy(double s, std::span<const double> x, std::span<double> y);
void scale(double s, std::span<double> x);

/// Compressed-row sparse matrix. Column indices are sorted within each row
/// and duplicates have been combined.
class SparseMatrix {
public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols, std::vector<int> row_offsets,
               std::vector<int> col_indices, std::vector<double> values);

  /// Build from (row, col, value) triplets; duplicates are summed.
  static SparseMatrix from_triplets(
      int rows, int cols, std::vector<std::tuple<int, int, double>> triplets);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::span<const int> row_offsets() const { return row_offsets_; }
  std::span<const int> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  Vector apply(std::span<const double> x) const;
  void apply(std::span<const double> x, std::span<double> y) const;

  double entry(int r, int c) const;

private:
  int rows_ = 0, cols_ = 0;
  std::vector<int> row_offsets_;
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
  std::span<const double> data() const { return data_; }

  Vector apply(std::span<const double> x) const;
  double max_abs() const;

  static DenseMatrix from_sparse(const SparseMatrix& a);

private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense LU with partial pivoting; P*A = L*U.
class LuFactors {
public:
  static LuFactors factor(const DenseMatrix& a);

  Vector solve(std::span<const double> b) const;
  int dim() const { return lu_.rows(); }

private:
  DenseMatrix lu_;
  std::vector<int> pivots_;
};

/// Explicit dense inverse, applied by matrix-vector product.
DenseMatrix invert(const DenseMatrix& a);

struct LanczosResult {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool breakdown = false;
  int iterations = 0;
};

using LinearOperator = std::function<Vector(std::span<const double>)>;

/// Extreme-eigenvalue estimates for an operator T that is self-adjoint in the
/// inner product induced by `inner_product` (Euclidean when absent). Lanczos
/// with full reorthogonalization; extremes of the tridiagonal section are
/// extracted by Sturm bisection.
LanczosResult lanczos_extremes(const LinearOperator& apply_t, int dim, int iters,
                               const LinearOperator& inner_product = nullptr);

struct SpectrumEstimate {
  double min_real = 0.0;
  double max_real = 0.0;
  int iterations = 0;
};

/// Ritz-value real-part range of a (possibly nonsymmetric) operator from an
/// Arnoldi decomposition; eigenvalues of the Hessenberg section are computed
/// by shifted QR iteration. For self-adjoint operators this coincides with
/// Lanczos estimation.
SpectrumEstimate arnoldi_extremes(const LinearOperator& apply_t, int dim, int iters);

}  // namespace patchmg
