#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace nsshape::linalg {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Triplet accumulator; duplicates are summed by `assemble`.
class CooBuilder {
 public:
  CooBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}

  void add(int row, int col, double value);
  void reserve(std::size_t n) { triplets_.reserve(n); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<Triplet>& triplets() const { return triplets_; }

 private:
  int rows_;
  int cols_;
  std::vector<Triplet> triplets_;
};

/// Compressed row storage with sorted, unique column indices per row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx, std::vector<double> values);

  static SparseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }
  std::span<const int> row_ptr() const { return row_ptr_; }
  std::span<const int> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values_mut() { return values_; }

  /// Entry (i, j), zero when not stored.
  double at(int i, int j) const;
  SparseMatrix transpose() const;
  /// Pattern union with scaled sum: this + s * other.
  SparseMatrix add(const SparseMatrix& other, double s = 1.0) const;
  SparseMatrix scaled(double s) const;

  bool same_pattern(const SparseMatrix& other) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// Sums duplicates in (row, col, value) order, so any permutation of the
/// same triplets yields a bit-identical matrix. Throws std::out_of_range.
SparseMatrix assemble(const CooBuilder& builder);

/// y = A x. Throws std::invalid_argument on dimension mismatch.
std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x);
/// y = A^T x.
std::vector<double> spmv_transpose(const SparseMatrix& a, std::span<const double> x);

/// [[a, b^T], [b, 0]] for a square `a` and `b` with a.cols() columns.
SparseMatrix saddle_point(const SparseMatrix& a, const SparseMatrix& b);
/// Block matrix [[a, c], [d, e]] with an explicit lower-right block.
SparseMatrix block2x2(const SparseMatrix& a, const SparseMatrix& c, const SparseMatrix& d, const SparseMatrix& e);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

inline constexpr double kPivotTolerance = 1e-13;

/// Sparse LU with partial pivoting (UMFPACK). The symbolic analysis is reused
/// by `refactor` when the sparsity pattern is unchanged.
class LuFactorization {
 public:
  explicit LuFactorization(const SparseMatrix& a);
  ~LuFactorization();
  LuFactorization(LuFactorization&&) noexcept;
  LuFactorization& operator=(LuFactorization&&) noexcept;
  LuFactorization(const LuFactorization&) = delete;
  LuFactorization& operator=(const LuFactorization&) = delete;

  void refactor(const SparseMatrix& a);
  std::vector<double> solve(std::span<const double> b) const;
  int size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot factor-and-solve. Throws SingularSystemError with the pivot index.
std::vector<double> solve_direct(const SparseMatrix& a, std::span<const double> b);

}  // namespace nsshape::linalg
