#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "hybreg/errors.hpp"
#include "hybreg/random.hpp"

namespace hybreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorConstRef = Eigen::Ref<const Vector>;
using VectorRef = Eigen::Ref<Vector>;

struct OperatorShape {
  Index rows = 0;
  Index cols = 0;

  friend bool operator==(const OperatorShape&, const OperatorShape&) = default;
};

class LinearOperator;
double estimate_frobenius_norm(const LinearOperator& op, int samples = 100,
                               std::uint64_t seed = 0x5eedf00dULL);

//-----------------------------------------------------------------------------
/// Matrix-free m x n linear map.
///
/// Concrete operators implement the two `*_impl` hooks; the public entry
/// points validate dimensions and finiteness before dispatching. Operators
/// are immutable once constructed, and the hooks never touch shared scratch,
/// so one instance may be applied from several threads at once.
//-----------------------------------------------------------------------------
class LinearOperator {
public:
  virtual ~LinearOperator() = default;

  const OperatorShape& shape() const noexcept { return shape_; }
  Index rows() const noexcept { return shape_.rows; }
  Index cols() const noexcept { return shape_.cols; }

  Vector apply(VectorConstRef v) const {
    Vector out(rows());
    apply_to(v, out);
    return out;
  }

  Vector apply_adjoint(VectorConstRef u) const {
    Vector out(cols());
    apply_adjoint_to(u, out);
    return out;
  }

  void apply_to(VectorConstRef v, VectorRef out) const {
    detail::require(v.size() == cols(), "apply: input length " + std::to_string(v.size()) +
                                            " does not match operator " +
                                            detail::dims(rows(), cols()));
    detail::require(out.size() == rows(), "apply: output length mismatch");
    detail::require(v.allFinite(), "apply: input has non-finite entries");
    apply_impl(v, out);
  }

  void apply_adjoint_to(VectorConstRef u, VectorRef out) const {
    detail::require(u.size() == rows(), "apply_adjoint: input length " +
                                            std::to_string(u.size()) +
                                            " does not match operator " +
                                            detail::dims(rows(), cols()));
    detail::require(out.size() == cols(), "apply_adjoint: output length mismatch");
    detail::require(u.allFinite(), "apply_adjoint: input has non-finite entries");
    apply_adjoint_impl(u, out);
  }

  /// Frobenius norm, exact where the structure allows it. The default is a
  /// seeded Hutchinson estimate; it is only used to scale breakdown tests.
  virtual double frobenius_norm() const { return estimate_frobenius_norm(*this); }

protected:
  explicit LinearOperator(OperatorShape shape) : shape_(shape) {
    detail::require(shape.rows >= 1 && shape.cols >= 1,
                    "operator shape must be at least 1x1, got " +
                        detail::dims(shape.rows, shape.cols));
  }

  virtual void apply_impl(VectorConstRef v, VectorRef out) const = 0;
  virtual void apply_adjoint_impl(VectorConstRef u, VectorRef out) const = 0;

private:
  OperatorShape shape_;
};

/// ||A||_F^2 = E ||A z||^2 for Rademacher z.
inline double estimate_frobenius_norm(const LinearOperator& op, int samples,
                                      std::uint64_t seed) {
  Rng rng(seed);
  Vector z(op.cols());
  Vector az(op.rows());
  double sum = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (Index i = 0; i < z.size(); ++i) z[i] = rng.rademacher();
    op.apply_to(z, az);
    sum += az.squaredNorm();
  }
  return std::sqrt(sum / samples);
}

//-----------------------------------------------------------------------------
class DenseOperator final : public LinearOperator {
public:
  explicit DenseOperator(Matrix entries)
      : LinearOperator({entries.rows(), entries.cols()}), entries_(std::move(entries)) {
    detail::require(entries_.allFinite(), "DenseOperator: entries must be finite");
  }

  static DenseOperator from_row_major(Index rows, Index cols, std::span<const double> data) {
    detail::require(rows >= 1 && cols >= 1, "DenseOperator: empty shape");
    detail::require(static_cast<Index>(data.size()) == rows * cols,
                    "DenseOperator: entry count does not match " + detail::dims(rows, cols));
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = data[static_cast<std::size_t>(i * cols + j)];
    return DenseOperator(std::move(m));
  }

  const Matrix& matrix() const noexcept { return entries_; }

  double frobenius_norm() const override { return entries_.norm(); }

protected:
  void apply_impl(VectorConstRef v, VectorRef out) const override { out.noalias() = entries_ * v; }
  void apply_adjoint_impl(VectorConstRef u, VectorRef out) const override {
    out.noalias() = entries_.transpose() * u;
  }

private:
  Matrix entries_;
};

//-----------------------------------------------------------------------------
class IdentityOperator final : public LinearOperator {
public:
  explicit IdentityOperator(Index n) : LinearOperator({n, n}) {}

  double frobenius_norm() const override { return std::sqrt(static_cast<double>(rows())); }

protected:
  void apply_impl(VectorConstRef v, VectorRef out) const override { out = v; }
  void apply_adjoint_impl(VectorConstRef u, VectorRef out) const override { out = u; }
};

//-----------------------------------------------------------------------------
/// (n-1) x n first-difference matrix with rows (..., 1, -1, ...).
class FirstDifferenceOperator final : public LinearOperator {
public:
  explicit FirstDifferenceOperator(Index n) : LinearOperator({n - 1, n}) {
    detail::require(n >= 2, "FirstDifferenceOperator needs n >= 2");
  }

  Index n() const noexcept { return cols(); }

  double frobenius_norm() const override { return std::sqrt(2.0 * static_cast<double>(rows())); }

protected:
  void apply_impl(VectorConstRef v, VectorRef out) const override {
    const Index m = rows();
    out = v.head(m) - v.tail(m);
  }

  void apply_adjoint_impl(VectorConstRef u, VectorRef out) const override {
    const Index m = rows();
    out.setZero();
    out.head(m) += u;
    out.tail(m) -= u;
  }
};

//-----------------------------------------------------------------------------
/// [I_N (x) L1 ; L1 (x) I_N] acting on column-major vec(X), X of size N x N.
///
/// The first N(N-1) outputs are vec(L1 X) (differences down each column),
/// the remaining N(N-1) are vec(X L1^T) (differences along each row).
class Stacked2DDifferenceOperator final : public LinearOperator {
public:
  explicit Stacked2DDifferenceOperator(Index grid_side)
      : LinearOperator({2 * grid_side * (grid_side - 1), grid_side * grid_side}),
        side_(grid_side) {
    detail::require(grid_side >= 2, "Stacked2DDifferenceOperator needs N >= 2");
  }

  Index grid_side() const noexcept { return side_; }

  double frobenius_norm() const override { return std::sqrt(2.0 * static_cast<double>(rows())); }

protected:
  void apply_impl(VectorConstRef v, VectorRef out) const override {
    const Index n = side_;
    const Index half = n * (n - 1);
    Eigen::Map<const Matrix> x(v.data(), n, n);
    Eigen::Map<Matrix> down(out.data(), n - 1, n);
    Eigen::Map<Matrix> across(out.data() + half, n, n - 1);
    down = x.topRows(n - 1) - x.bottomRows(n - 1);
    across = x.leftCols(n - 1) - x.rightCols(n - 1);
  }

  void apply_adjoint_impl(VectorConstRef u, VectorRef out) const override {
    const Index n = side_;
    const Index half = n * (n - 1);
    Eigen::Map<const Matrix> down(u.data(), n - 1, n);
    Eigen::Map<const Matrix> across(u.data() + half, n, n - 1);
    Eigen::Map<Matrix> w(out.data(), n, n);
    w.setZero();
    w.topRows(n - 1) += down;
    w.bottomRows(n - 1) -= down;
    w.leftCols(n - 1) += across;
    w.rightCols(n - 1) -= across;
  }

private:
  Index side_;
};

//-----------------------------------------------------------------------------
/// Separable 2-D operator: vec(X) -> vec(left * X * right^T), i.e. the
/// Kronecker product (right (x) left) in column-major vec convention.
class KroneckerBlurOperator final : public LinearOperator {
public:
  KroneckerBlurOperator(DenseOperator left, DenseOperator right)
      : LinearOperator({left.rows() * right.rows(), left.cols() * right.cols()}),
        left_(std::move(left)),
        right_(std::move(right)) {}

  const DenseOperator& left_factor() const noexcept { return left_; }
  const DenseOperator& right_factor() const noexcept { return right_; }

  double frobenius_norm() const override {
    return left_.frobenius_norm() * right_.frobenius_norm();
  }

protected:
  void apply_impl(VectorConstRef v, VectorRef out) const override {
    const Matrix& a = left_.matrix();
    const Matrix& b = right_.matrix();
    Eigen::Map<const Matrix> x(v.data(), a.cols(), b.cols());
    Eigen::Map<Matrix> y(out.data(), a.rows(), b.rows());
    y.noalias() = a * x * b.transpose();
  }

  void apply_adjoint_impl(VectorConstRef u, VectorRef out) const override {
    const Matrix& a = left_.matrix();
    const Matrix& b = right_.matrix();
    Eigen::Map<const Matrix> y(u.data(), a.rows(), b.rows());
    Eigen::Map<Matrix> x(out.data(), a.cols(), b.cols());
    x.noalias() = a.transpose() * y * b;
  }

private:
  DenseOperator left_;
  DenseOperator right_;
};

//-----------------------------------------------------------------------------
/// Largest |Q^T Q - I| entry.
inline double orthonormality_defect(const Eigen::Ref<const Matrix>& q) {
  if (q.cols() == 0) return 0.0;
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

/// v - Q (Q^T v).
inline Vector project_complement(const Eigen::Ref<const Matrix>& q, VectorConstRef v) {
  detail::require(q.rows() == v.size(), "project_complement: Q has " +
                                            std::to_string(q.rows()) + " rows but v has length " +
                                            std::to_string(v.size()));
  if (q.cols() == 0) return v;
  Vector coeffs = q.transpose() * v;
  return v - q * coeffs;
}

//-----------------------------------------------------------------------------
/// L (I - Q Q^T), applied without ever forming the p x n product.
///
/// The forward product projects first and then applies L; the adjoint applies
/// L^T and projects the result. This is the operator whose Golub-Kahan process
/// LSQR runs for the inner problems. Holds a reference to `L`, which must
/// outlive this object, and a copy of the (small) orthonormal block Q.
class ProjectedOperator final : public LinearOperator {
public:
  static constexpr double kOrthonormalityTol = 1e-10;

  ProjectedOperator(const LinearOperator& l, Matrix q)
      : LinearOperator(l.shape()), l_(&l), q_(std::move(q)) {
    detail::require(q_.rows() == l.cols(), "ProjectedOperator: Q has " +
                                               std::to_string(q_.rows()) +
                                               " rows, L has " + std::to_string(l.cols()) +
                                               " columns");
    detail::require(orthonormality_defect(q_) <= kOrthonormalityTol,
                    "ProjectedOperator: Q columns are not orthonormal");
  }

  const LinearOperator& regularizer() const noexcept { return *l_; }
  const Matrix& basis() const noexcept { return q_; }

  /// ||L P||_F <= ||L||_F for the orthogonal projector P; the bound is what
  /// breakdown tests need.
  double frobenius_norm() const override { return l_->frobenius_norm(); }

protected:
  void apply_impl(VectorConstRef v, VectorRef out) const override {
    l_->apply_to(project_complement(q_, v), out);
  }

  void apply_adjoint_impl(VectorConstRef u, VectorRef out) const override {
    out = project_complement(q_, l_->apply_adjoint(u));
  }

private:
  const LinearOperator* l_;
  Matrix q_;
};

//-----------------------------------------------------------------------------
/// Dense copy of an operator, built column by column. Test/oracle use only.
inline Matrix materialize(const LinearOperator& op, Index max_entries = 1'000'000) {
  if (op.rows() * op.cols() > max_entries)
    throw OracleSizeError("materialize: " + detail::dims(op.rows(), op.cols()) +
                          " exceeds the dense size guard");
  Matrix dense(op.rows(), op.cols());
  Vector e = Vector::Zero(op.cols());
  for (Index j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    op.apply_to(e, dense.col(j));
    e[j] = 0.0;
  }
  return dense;
}

}  // namespace hybreg
