#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hybreg/dense_kernels.hpp"
#include "hybreg/errors.hpp"
#include "hybreg/operators.hpp"

namespace hybreg {

enum class Reorthogonalization { none, full };

/// Where a Golub-Kahan process stopped. `kind == alpha` means q_step could not
/// be formed (k stays at step-1); `kind == beta` means q_step and alpha_step
/// are valid but p_{step+1} is not (k == step).
struct Breakdown {
  enum class Kind { alpha, beta };
  Index step = 0;
  Kind kind = Kind::alpha;
};

/// Dense views of the projected matrices after k steps.
struct BidiagMatrices {
  Matrix B_k;                     ///< k x k lower bidiagonal
  Matrix B_kplus;                 ///< (k+1) x k, B_k with beta_{k+1} e_k^T appended
  std::optional<Matrix> B_kp1;    ///< (k+1) x (k+1); present only once step k+1 exists
};

//-----------------------------------------------------------------------------
/// Golub-Kahan bidiagonalization of A started from b.
///
/// After k steps: A^T P_k = Q_k B_k^T and A Q_k = P_{k+1} B_{k+}, with
/// beta_1 = ||b|| and p_1 = b / ||b||. P and Q are stored as dense column
/// blocks because the hybrid solvers need Q_k explicitly. The state grows in
/// place; it is single-writer, and const access is safe once `extend` returns.
//-----------------------------------------------------------------------------
class BidiagState {
public:
  static constexpr double kBreakdownFactor = 1e-14;

  /// Sets p_1 and beta_1; k = 0.
  static BidiagState init(const LinearOperator& a, VectorConstRef b,
                          Reorthogonalization reorth = Reorthogonalization::full) {
    detail::require(b.size() == a.rows(), "bidiag_init: b has length " +
                                              std::to_string(b.size()) + " but A is " +
                                              detail::dims(a.rows(), a.cols()));
    detail::require(b.allFinite(), "bidiag_init: b has non-finite entries");
    const double beta1 = b.norm();
    if (beta1 == 0.0) throw BreakdownError("bidiag_init: zero right-hand side", 0);

    BidiagState s;
    s.shape_ = a.shape();
    s.reorth_ = reorth;
    s.breakdown_tol_ = kBreakdownFactor * a.frobenius_norm();
    s.reserve(8);
    s.p_.col(0) = b / beta1;
    s.betas_.push_back(beta1);
    return s;
  }

  /// Assemble a state from explicit factors: P is m x (k+1), Q is n x k,
  /// `alphas` has k entries and `betas` k+1. Intended for synthetic tests.
  static BidiagState from_parts(const Matrix& p, const Matrix& q, std::vector<double> alphas,
                                std::vector<double> betas) {
    const Index k = q.cols();
    detail::require(p.cols() == k + 1, "from_parts: P must have k+1 columns");
    detail::require(static_cast<Index>(alphas.size()) == k, "from_parts: need k alphas");
    detail::require(static_cast<Index>(betas.size()) == k + 1, "from_parts: need k+1 betas");
    BidiagState s;
    s.shape_ = {p.rows(), q.rows()};
    s.reorth_ = Reorthogonalization::full;
    s.breakdown_tol_ = 0.0;
    s.p_ = p;
    s.q_ = q;
    s.alphas_ = std::move(alphas);
    s.betas_ = std::move(betas);
    s.k_ = k;
    return s;
  }

  /// Runs up to `steps` more steps. Returns the number completed; fewer than
  /// requested means a breakdown was recorded (see `breakdown()`).
  Index extend(const LinearOperator& a, Index steps) {
    detail::require(a.shape() == shape_, "bidiag_extend: operator shape changed");
    detail::require(steps >= 0, "bidiag_extend: negative step count");
    if (breakdown_)
      throw BreakdownError("bidiag_extend: process already broke down at step " +
                               std::to_string(breakdown_->step),
                           breakdown_->step);

    Vector r(shape_.cols);
    Vector s(shape_.rows);
    for (Index done = 0; done < steps; ++done) {
      const Index j = k_;  // zero-based index of the new column pair
      reserve(j + 2);

      a.apply_adjoint_to(p_.col(j), r);
      if (j > 0) r -= betas_[static_cast<std::size_t>(j)] * q_.col(j - 1);
      if (reorth_ == Reorthogonalization::full) reorthogonalize(q_.leftCols(j), r);
      const double alpha = r.norm();
      check_finite(alpha, j + 1);
      if (alpha <= breakdown_tol_) {
        breakdown_ = Breakdown{j + 1, Breakdown::Kind::alpha};
        return done;
      }
      q_.col(j) = r / alpha;
      alphas_.push_back(alpha);

      a.apply_to(q_.col(j), s);
      s -= alpha * p_.col(j);
      if (reorth_ == Reorthogonalization::full) reorthogonalize(p_.leftCols(j + 1), s);
      const double beta = s.norm();
      check_finite(beta, j + 1);
      betas_.push_back(beta);
      k_ = j + 1;
      if (beta <= breakdown_tol_) {
        p_.col(j + 1).setZero();
        breakdown_ = Breakdown{j + 1, Breakdown::Kind::beta};
        return done + 1;
      }
      p_.col(j + 1) = s / beta;
    }
    return steps;
  }

  Index k() const noexcept { return k_; }
  Index rows() const noexcept { return shape_.rows; }
  Index cols() const noexcept { return shape_.cols; }
  Reorthogonalization reorth() const noexcept { return reorth_; }
  const std::optional<Breakdown>& breakdown() const noexcept { return breakdown_; }
  double breakdown_tolerance() const noexcept { return breakdown_tol_; }

  double beta1() const { return betas_.front(); }
  /// alpha_1 .. alpha_k
  const std::vector<double>& alphas() const noexcept { return alphas_; }
  /// beta_1 .. beta_{k+1}
  const std::vector<double>& betas() const noexcept { return betas_; }

  /// P_j: the first j columns of P (j <= k+1).
  auto P(Index j) const {
    detail::require(j >= 0 && j <= k_ + 1, "BidiagState::P: only " +
                                               std::to_string(k_ + 1) + " columns available");
    return p_.leftCols(j);
  }

  /// Q_j: the first j columns of Q (j <= k).
  auto Q(Index j) const {
    detail::require(j >= 0 && j <= k_, "BidiagState::Q: only " + std::to_string(k_) +
                                           " columns available");
    return q_.leftCols(j);
  }

  /// The j x j lower-bidiagonal block B_j (alpha_1..alpha_j, beta_2..beta_j).
  LowerBidiagonal lower_bidiagonal(Index j) const {
    detail::require(j >= 1 && j <= k_, "lower_bidiagonal: j out of range");
    LowerBidiagonal b;
    b.diag.resize(j);
    b.sub.resize(j - 1);
    for (Index i = 0; i < j; ++i) b.diag[i] = alphas_[static_cast<std::size_t>(i)];
    for (Index i = 1; i < j; ++i) b.sub[i - 1] = betas_[static_cast<std::size_t>(i)];
    return b;
  }

private:
  BidiagState() = default;

  void reserve(Index columns) {
    if (p_.cols() >= columns && q_.cols() >= columns) return;
    Index capacity = std::max<Index>(columns, 2 * std::max<Index>(p_.cols(), 4));
    capacity = std::min(capacity, std::max(shape_.rows, shape_.cols) + 2);
    capacity = std::max(capacity, columns);
    p_.conservativeResize(shape_.rows, capacity);
    q_.conservativeResize(shape_.cols, capacity);
  }

  /// Two classical Gram-Schmidt passes against the columns of `basis`.
  static void reorthogonalize(const Eigen::Ref<const Matrix>& basis, Vector& v) {
    if (basis.cols() == 0) return;
    for (int pass = 0; pass < 2; ++pass) {
      Vector coeffs = basis.transpose() * v;
      v.noalias() -= basis * coeffs;
    }
  }

  static void check_finite(double value, Index step) {
    if (!std::isfinite(value))
      throw NumericalFailure("bidiag_extend: non-finite coefficient at step " +
                             std::to_string(step));
  }

  OperatorShape shape_{};
  Reorthogonalization reorth_ = Reorthogonalization::full;
  double breakdown_tol_ = 0.0;
  Matrix p_;
  Matrix q_;
  std::vector<double> alphas_;
  std::vector<double> betas_;
  Index k_ = 0;
  std::optional<Breakdown> breakdown_;
};

/// B_k, B_{k+} and (when step k+1 exists) the square B_{k+1}.
inline BidiagMatrices extract_matrices(const BidiagState& state, Index k) {
  detail::require(k >= 1, "extract_matrices: k must be at least 1");
  detail::require(k <= state.k(), "extract_matrices: only " + std::to_string(state.k()) +
                                      " steps available");
  BidiagMatrices out;
  out.B_k = state.lower_bidiagonal(k).dense();
  out.B_kplus = Matrix::Zero(k + 1, k);
  out.B_kplus.topRows(k) = out.B_k;
  out.B_kplus(k, k - 1) = state.betas()[static_cast<std::size_t>(k)];
  if (state.k() >= k + 1) out.B_kp1 = state.lower_bidiagonal(k + 1).dense();
  return out;
}

inline BidiagMatrices extract_matrices(const BidiagState& state) {
  return extract_matrices(state, state.k());
}

}  // namespace hybreg
