#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "hybreg/bidiag.hpp"
#include "hybreg/errors.hpp"
#include "hybreg/operators.hpp"

namespace hybreg {

/// ||L (x - x_true)|| / ||L x_true||.
inline double relative_error(const LinearOperator& l, VectorConstRef x, VectorConstRef x_true) {
  detail::require(x.size() == x_true.size(), "relative_error: length mismatch");
  const double denom = l.apply(x_true).norm();
  if (!(denom > 0.0))
    throw UndefinedMetricError("relative_error: ||L x_true|| is zero");
  return l.apply(x - x_true).norm() / denom;
}

struct ErrorCurve {
  std::vector<Index> ks;
  std::vector<double> rel_errors;
  Index best_k = 0;
  double best_error = 0.0;
  /// argmin strictly inside the sweep: the curve turned back up.
  bool interior_minimum = false;
};

/// `ks` defaults to 1, 2, ..., len. Ties go to the smallest k.
inline ErrorCurve analyze_curve(std::vector<double> rel_errors, std::vector<Index> ks = {}) {
  detail::require(!rel_errors.empty(), "analyze_curve: empty error sequence");
  if (ks.empty()) {
    ks.resize(rel_errors.size());
    std::iota(ks.begin(), ks.end(), Index{1});
  }
  detail::require(ks.size() == rel_errors.size(), "analyze_curve: ks/errors length mismatch");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rel_errors.size(); ++i)
    if (rel_errors[i] < rel_errors[best]) best = i;
  ErrorCurve curve;
  curve.best_k = ks[best];
  curve.best_error = rel_errors[best];
  curve.interior_minimum = best > 0 && best + 1 < rel_errors.size();
  curve.ks = std::move(ks);
  curve.rel_errors = std::move(rel_errors);
  return curve;
}

//-----------------------------------------------------------------------------
// Dense oracles. Test instruments only: size-guarded, built on Eigen's SVD so
// they stay independent of the library's own small-matrix kernels.

inline constexpr Index kOracleMaxEntries = 1'000'000;

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Pseudo-inverse keeping singular values above rcond * s_max.
inline Matrix dense_pinv(const Matrix& m, double rcond = 1e-12) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Vector inv = Vector::Zero(s.size());
  const double cutoff = s.size() > 0 ? rcond * s(0) : 0.0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Rank-k truncation of a dense matrix.
inline Matrix dense_truncate(const Matrix& m, Index rank) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Index r = std::min(rank, svd.singularValues().size());
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

struct GammaGapReport {
  Index k = 0;
  double gamma_cgme = 0.0;   ///< ||A - P_k B_k Q_k^T||
  double gamma_lsqr = 0.0;   ///< ||A - P_{k+1} B_{k+} Q_k^T||
  /// ||A - P_{k+1} C_k Q_{k+1}^T||; needs step k+1.
  std::optional<double> gamma_tcgme;
  double theta_min = 0.0;    ///< smallest singular value of B_{k+}
  /// smallest singular value of the square B_{k+1}; needs step k+1.
  std::optional<double> theta_min_square;
};

/// Rank-k approximation gaps of the bidiagonal projections, by explicit
/// assembly and dense SVD.
inline GammaGapReport gamma_gaps(const DenseOperator& a, const BidiagState& state, Index k) {
  const Matrix& am = a.matrix();
  if (am.rows() * am.cols() > kOracleMaxEntries)
    throw OracleSizeError("gamma_gaps: " + detail::dims(am.rows(), am.cols()) +
                          " exceeds the oracle size guard");
  detail::require(k >= 1 && k <= state.k(), "gamma_gaps: k out of range");
  detail::require(state.rows() == am.rows() && state.cols() == am.cols(),
                  "gamma_gaps: state does not belong to this operator");
  const BidiagMatrices mats = extract_matrices(state, k);

  GammaGapReport rep;
  rep.k = k;
  rep.gamma_cgme = spectral_norm(am - state.P(k) * mats.B_k * state.Q(k).transpose());
  rep.gamma_lsqr = spectral_norm(am - state.P(k + 1) * mats.B_kplus * state.Q(k).transpose());
  rep.theta_min = Eigen::JacobiSVD<Matrix>(mats.B_kplus).singularValues()(k - 1);
  if (mats.B_kp1) {
    const Matrix c_k = dense_truncate(*mats.B_kp1, k);
    rep.gamma_tcgme = spectral_norm(am - state.P(k + 1) * c_k * state.Q(k + 1).transpose());
    rep.theta_min_square = Eigen::JacobiSVD<Matrix>(*mats.B_kp1).singularValues()(k);
  }
  return rep;
}

/// kappa(L Q_perp) = kappa(L (I - Q Q^T)) restricted to range(Q)^perp, with
/// Q_perp from a full orthogonal completion of Q. Returns +inf when
/// sigma_min < 1e-14 sigma_max.
inline double projected_condition(const Matrix& l, const Eigen::Ref<const Matrix>& q) {
  const Index n = l.cols();
  const Index k = q.cols();
  detail::require(q.rows() == n, "projected_condition: Q rows must equal L cols");
  detail::require(k < n, "projected_condition: Q must leave a non-trivial complement");
  detail::require(l.rows() >= n - k, "projected_condition: needs p >= n - k");
  if (l.rows() * n > kOracleMaxEntries)
    throw OracleSizeError("projected_condition: L exceeds the oracle size guard");

  Matrix complement;
  if (k == 0) {
    complement = Matrix::Identity(n, n);
  } else {
    Eigen::HouseholderQR<Matrix> qr(q);
    const Matrix full = qr.householderQ() * Matrix::Identity(n, n);
    complement = full.rightCols(n - k);
  }
  Eigen::BDCSVD<Matrix> svd(l * complement);
  const Vector& s = svd.singularValues();
  const double s_max = s(0);
  const double s_min = s(s.size() - 1);
  if (s_min < 1e-14 * s_max) return std::numeric_limits<double>::infinity();
  return s_max / s_min;
}

inline double projected_condition(const LinearOperator& l, const Eigen::Ref<const Matrix>& q) {
  return projected_condition(materialize(l, kOracleMaxEntries), q);
}

}  // namespace hybreg
