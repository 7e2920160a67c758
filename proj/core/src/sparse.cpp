#include "nsshape/sparse.hpp"

#include <suitesparse/umfpack.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nsshape/errors.hpp"

namespace nsshape::linalg {

void CooBuilder::add(int row, int col, double value) {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_)
    throw std::out_of_range("CooBuilder::add: index (" + std::to_string(row) + ", " + std::to_string(col) +
                            ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
  triplets_.push_back({row, col, value});
}

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx,
                           std::vector<double> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {}

SparseMatrix SparseMatrix::identity(int n) {
  std::vector<int> rp(static_cast<std::size_t>(n) + 1), ci(static_cast<std::size_t>(n));
  for (int i = 0; i <= n; ++i) rp[i] = i;
  for (int i = 0; i < n; ++i) ci[i] = i;
  return SparseMatrix(n, n, std::move(rp), std::move(ci), std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

double SparseMatrix::at(int i, int j) const {
  const auto first = col_idx_.begin() + row_ptr_[i], last = col_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<int> rp(static_cast<std::size_t>(cols_) + 1, 0);
  for (int c : col_idx_) ++rp[c + 1];
  for (int j = 0; j < cols_; ++j) rp[j + 1] += rp[j];
  std::vector<int> ci(col_idx_.size());
  std::vector<double> v(values_.size());
  std::vector<int> fill(rp.begin(), rp.end() - 1);
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const int dst = fill[col_idx_[k]]++;
      ci[dst] = i;
      v[dst] = values_[k];
    }
  return SparseMatrix(cols_, rows_, std::move(rp), std::move(ci), std::move(v));
}

SparseMatrix SparseMatrix::add(const SparseMatrix& other, double s) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw std::invalid_argument("SparseMatrix::add: shape mismatch");
  std::vector<int> rp(static_cast<std::size_t>(rows_) + 1, 0);
  std::vector<int> ci;
  std::vector<double> v;
  ci.reserve(std::max(nonzeros(), other.nonzeros()));
  v.reserve(ci.capacity());
  for (int i = 0; i < rows_; ++i) {
    int a = row_ptr_[i], b = other.row_ptr_[i];
    const int ae = row_ptr_[i + 1], be = other.row_ptr_[i + 1];
    while (a < ae || b < be) {
      if (b >= be || (a < ae && col_idx_[a] < other.col_idx_[b])) {
        ci.push_back(col_idx_[a]);
        v.push_back(values_[a++]);
      } else if (a >= ae || other.col_idx_[b] < col_idx_[a]) {
        ci.push_back(other.col_idx_[b]);
        v.push_back(s * other.values_[b++]);
      } else {
        ci.push_back(col_idx_[a]);
        v.push_back(values_[a++] + s * other.values_[b++]);
      }
    }
    rp[i + 1] = static_cast<int>(ci.size());
  }
  return SparseMatrix(rows_, cols_, std::move(rp), std::move(ci), std::move(v));
}

SparseMatrix SparseMatrix::scaled(double s) const {
  SparseMatrix out = *this;
  for (double& x : out.values_) x *= s;
  return out;
}

bool SparseMatrix::same_pattern(const SparseMatrix& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && row_ptr_ == other.row_ptr_ && col_idx_ == other.col_idx_;
}

SparseMatrix assemble(const CooBuilder& builder) {
  std::vector<Triplet> t = builder.triplets();
  for (const auto& x : t)
    if (x.row < 0 || x.row >= builder.rows() || x.col < 0 || x.col >= builder.cols())
      throw std::out_of_range("assemble: triplet index out of bounds");
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return a.value < b.value;
  });
  std::vector<int> rp(static_cast<std::size_t>(builder.rows()) + 1, 0);
  std::vector<int> ci;
  std::vector<double> v;
  for (std::size_t k = 0; k < t.size();) {
    std::size_t e = k;
    double sum = 0.0;
    while (e < t.size() && t[e].row == t[k].row && t[e].col == t[k].col) sum += t[e++].value;
    ci.push_back(t[k].col);
    v.push_back(sum);
    ++rp[t[k].row + 1];
    k = e;
  }
  for (int i = 0; i < builder.rows(); ++i) rp[i + 1] += rp[i];
  return SparseMatrix(builder.rows(), builder.cols(), std::move(rp), std::move(ci), std::move(v));
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.cols()) throw std::invalid_argument("spmv: dimension mismatch");
  std::vector<double> y(static_cast<std::size_t>(a.rows()), 0.0);
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto v = a.values();
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int k = rp[i]; k < rp[i + 1]; ++k) s += v[k] * x[ci[k]];
    y[i] = s;
  }
  return y;
}

std::vector<double> spmv_transpose(const SparseMatrix& a, std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.rows()) throw std::invalid_argument("spmv_transpose: dimension mismatch");
  std::vector<double> y(static_cast<std::size_t>(a.cols()), 0.0);
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto v = a.values();
  for (int i = 0; i < a.rows(); ++i)
    for (int k = rp[i]; k < rp[i + 1]; ++k) y[ci[k]] += v[k] * x[i];
  return y;
}

SparseMatrix block2x2(const SparseMatrix& a, const SparseMatrix& c, const SparseMatrix& d, const SparseMatrix& e) {
  if (a.rows() != c.rows() || d.rows() != e.rows() || a.cols() != d.cols() || c.cols() != e.cols())
    throw std::invalid_argument("block2x2: inconsistent block shapes");
  const int n = a.rows() + d.rows(), m = a.cols() + c.cols();
  std::vector<int> rp(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> ci;
  std::vector<double> v;
  ci.reserve(a.nonzeros() + c.nonzeros() + d.nonzeros() + e.nonzeros());
  v.reserve(ci.capacity());
  auto append_row = [&](const SparseMatrix& left, const SparseMatrix& right, int i) {
    for (int k = left.row_ptr()[i]; k < left.row_ptr()[i + 1]; ++k) {
      ci.push_back(left.col_idx()[k]);
      v.push_back(left.values()[k]);
    }
    for (int k = right.row_ptr()[i]; k < right.row_ptr()[i + 1]; ++k) {
      ci.push_back(left.cols() + right.col_idx()[k]);
      v.push_back(right.values()[k]);
    }
  };
  for (int i = 0; i < a.rows(); ++i) {
    append_row(a, c, i);
    rp[i + 1] = static_cast<int>(ci.size());
  }
  for (int i = 0; i < d.rows(); ++i) {
    append_row(d, e, i);
    rp[a.rows() + i + 1] = static_cast<int>(ci.size());
  }
  return SparseMatrix(n, m, std::move(rp), std::move(ci), std::move(v));
}

SparseMatrix saddle_point(const SparseMatrix& a, const SparseMatrix& b) {
  // Explicit (structural) zero diagonal keeps the pattern of pinned rows stable.
  const int np = b.rows();
  std::vector<int> rp(static_cast<std::size_t>(np) + 1), ci(static_cast<std::size_t>(np));
  for (int i = 0; i <= np; ++i) rp[i] = i;
  for (int i = 0; i < np; ++i) ci[i] = i;
  SparseMatrix zero(np, np, std::move(rp), std::move(ci), std::vector<double>(static_cast<std::size_t>(np), 0.0));
  return block2x2(a, b.transpose(), b, zero);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct LuFactorization::Impl {
  SparseMatrix matrix;
  void* symbolic = nullptr;
  void* numeric = nullptr;
  double control[UMFPACK_CONTROL];

  Impl() {
    umfpack_di_defaults(control);
    // Unscaled, so the U diagonal is comparable with the matrix entries in the pivot test.
    control[UMFPACK_SCALE] = UMFPACK_SCALE_NONE;
  }
  ~Impl() { release(); }

  void release_numeric() {
    if (numeric) umfpack_di_free_numeric(&numeric);
    numeric = nullptr;
  }
  void release() {
    release_numeric();
    if (symbolic) umfpack_di_free_symbolic(&symbolic);
    symbolic = nullptr;
  }

  // UMFPACK reads compressed columns; our CSR arrays are the CSC form of A^T,
  // so the factorization is of A^T and solves use the transposed system.
  void analyze() {
    double info[UMFPACK_INFO];
    const int n = matrix.rows();
    const int status = umfpack_di_symbolic(n, n, matrix.row_ptr().data(), matrix.col_idx().data(),
                                           matrix.values().data(), &symbolic, control, info);
    if (status != UMFPACK_OK) throw SingularSystemError("sparse LU: symbolic analysis failed, status " + std::to_string(status), -1);
  }

  void factor() {
    double info[UMFPACK_INFO];
    const int status = umfpack_di_numeric(matrix.row_ptr().data(), matrix.col_idx().data(), matrix.values().data(),
                                          symbolic, &numeric, control, info);
    if (status != UMFPACK_OK && status != UMFPACK_WARNING_singular_matrix)
      throw SingularSystemError("sparse LU: numeric factorization failed, status " + std::to_string(status), -1);
    check_pivots(status == UMFPACK_WARNING_singular_matrix);
  }

  void check_pivots(bool flagged) {
    const int n = matrix.rows();
    std::vector<double> diag(static_cast<std::size_t>(n));
    std::vector<int> q(static_cast<std::size_t>(n));
    int do_recip = 0;
    umfpack_di_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, q.data(), diag.data(),
                           &do_recip, nullptr, numeric);
    double largest = 0.0;
    for (double v : matrix.values()) largest = std::max(largest, std::abs(v));
    for (int k = 0; k < n; ++k) {
      if (std::abs(diag[k]) <= kPivotTolerance * largest || (flagged && diag[k] == 0.0)) {
        release_numeric();
        throw SingularSystemError("sparse LU: singular matrix", q[k]);
      }
    }
  }
};

LuFactorization::LuFactorization(const SparseMatrix& a) : impl_(std::make_unique<Impl>()) {
  if (a.rows() != a.cols()) throw std::invalid_argument("LuFactorization: matrix must be square");
  impl_->matrix = a;
  if (a.rows() == 0) return;
  impl_->analyze();
  impl_->factor();
}

LuFactorization::~LuFactorization() = default;
LuFactorization::LuFactorization(LuFactorization&&) noexcept = default;
LuFactorization& LuFactorization::operator=(LuFactorization&&) noexcept = default;

void LuFactorization::refactor(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("LuFactorization: matrix must be square");
  const bool reuse = impl_->symbolic && impl_->matrix.same_pattern(a);
  impl_->release_numeric();
  if (!reuse) {
    impl_->release();
    impl_->matrix = a;
    if (a.rows() == 0) return;
    impl_->analyze();
  } else {
    impl_->matrix = a;
  }
  impl_->factor();
}

int LuFactorization::size() const { return impl_->matrix.rows(); }

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
  const int n = impl_->matrix.rows();
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("LuFactorization::solve: dimension mismatch");
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  if (n == 0) return x;
  double info[UMFPACK_INFO];
  const auto& m = impl_->matrix;
  const int status = umfpack_di_solve(UMFPACK_At, m.row_ptr().data(), m.col_idx().data(), m.values().data(), x.data(),
                                      b.data(), impl_->numeric, impl_->control, info);
  if (status != UMFPACK_OK) throw SingularSystemError("sparse LU: solve failed, status " + std::to_string(status), -1);
  return x;
}

std::vector<double> solve_direct(const SparseMatrix& a, std::span<const double> b) {
  const LuFactorization lu(a);
  return lu.solve(b);
}

}  // namespace nsshape::linalg
