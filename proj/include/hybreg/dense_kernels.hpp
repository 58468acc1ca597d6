#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "hybreg/errors.hpp"
#include "hybreg/operators.hpp"

// Small dense factorizations for the projected (k x k, (k+1) x (k+1)) blocks.

namespace hybreg {

/// Square lower-bidiagonal matrix: `diag` on the diagonal, `sub` (one shorter)
/// on the first subdiagonal.
struct LowerBidiagonal {
  Vector diag;
  Vector sub;

  Index size() const noexcept { return diag.size(); }

  Matrix dense() const {
    const Index k = size();
    Matrix b = Matrix::Zero(k, k);
    b.diagonal() = diag;
    if (k > 1) b.diagonal(-1) = sub;
    return b;
  }
};

struct SmallSVD {
  Matrix U;                ///< r x r orthogonal
  Vector singular_values;  ///< min(r, c) values, non-increasing
  Matrix V;                ///< c x c orthogonal

  Matrix reconstruct() const {
    const Index p = singular_values.size();
    return U.leftCols(p) * singular_values.asDiagonal() * V.leftCols(p).transpose();
  }
};

namespace detail {

/// Hestenes one-sided Jacobi: rotates columns of `w` (r >= c) until they are
/// mutually orthogonal to working precision, accumulating rotations in `v`.
inline void one_sided_jacobi(Matrix& w, Matrix& v) {
  const Index c = w.cols();
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i + 1 < c; ++i) {
      for (Index j = i + 1; j < c; ++j) {
        const double alpha = w.col(i).squaredNorm();
        const double beta = w.col(j).squaredNorm();
        const double gamma = w.col(i).dot(w.col(j));
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (Index r = 0; r < w.rows(); ++r) {
          const double wi = w(r, i);
          const double wj = w(r, j);
          w(r, i) = cs * wi - sn * wj;
          w(r, j) = sn * wi + cs * wj;
        }
        for (Index r = 0; r < v.rows(); ++r) {
          const double vi = v(r, i);
          const double vj = v(r, j);
          v(r, i) = cs * vi - sn * vj;
          v(r, j) = sn * vi + cs * vj;
        }
      }
    }
    if (!rotated) return;
  }
}

/// SVD of a tall (r >= c) matrix.
inline SmallSVD svd_tall(const Matrix& m) {
  const Index r = m.rows();
  const Index c = m.cols();
  Matrix w = m;
  Matrix v = Matrix::Identity(c, c);
  one_sided_jacobi(w, v);

  Vector norms = w.colwise().norm().transpose();
  std::vector<Index> order(static_cast<std::size_t>(c));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return norms[a] > norms[b]; });

  SmallSVD out;
  out.singular_values.resize(c);
  out.V.resize(c, c);
  out.U = Matrix::Zero(r, r);

  const double s_max = c > 0 ? norms[order[0]] : 0.0;
  const double cutoff = s_max * std::numeric_limits<double>::epsilon();
  std::vector<Index> missing;
  Index good = 0;
  for (Index pos = 0; pos < c; ++pos) {
    const Index src = order[static_cast<std::size_t>(pos)];
    out.singular_values[pos] = norms[src];
    out.V.col(pos) = v.col(src);
    if (norms[src] > cutoff && norms[src] > 0.0) {
      out.U.col(pos) = w.col(src) / norms[src];
      ++good;
    } else {
      missing.push_back(pos);
    }
  }
  for (Index pos = c; pos < r; ++pos) missing.push_back(pos);

  if (!missing.empty()) {
    // Orthonormal completion of the well-defined left singular vectors.
    Matrix basis;
    if (good == 0) {
      basis = Matrix::Identity(r, r);
    } else {
      Matrix known(r, good);
      Index g = 0;
      for (Index pos = 0; pos < c; ++pos)
        if (std::find(missing.begin(), missing.end(), pos) == missing.end())
          known.col(g++) = out.U.col(pos);
      Eigen::HouseholderQR<Matrix> qr(known);
      basis = qr.householderQ() * Matrix::Identity(r, r);
    }
    Index next = good == 0 ? 0 : good;
    for (Index pos : missing) out.U.col(pos) = basis.col(next++);
  }
  return out;
}

}  // namespace detail

/// Full SVD of a small dense matrix via one-sided Jacobi.
inline SmallSVD svd_small(const Matrix& m) {
  detail::require(m.rows() >= 1 && m.cols() >= 1, "svd_small: empty matrix");
  detail::require(m.rows() * m.cols() <= 1'000'000, "svd_small: " +
                                                        detail::dims(m.rows(), m.cols()) +
                                                        " exceeds the desk-scale guard");
  detail::require(m.allFinite(), "svd_small: non-finite entries");
  if (m.rows() >= m.cols()) return detail::svd_tall(m);
  SmallSVD t = detail::svd_tall(m.transpose());
  return SmallSVD{std::move(t.V), std::move(t.singular_values), std::move(t.U)};
}

/// Forward substitution for B y = rhs, B lower bidiagonal.
inline Vector bidiag_solve(const LowerBidiagonal& b, VectorConstRef rhs,
                           double singular_threshold = 0.0) {
  const Index k = b.size();
  detail::require(k >= 1, "bidiag_solve: empty matrix");
  detail::require(b.sub.size() == k - 1, "bidiag_solve: subdiagonal must have k-1 entries");
  detail::require(rhs.size() == k, "bidiag_solve: rhs length mismatch");
  Vector y(k);
  for (Index i = 0; i < k; ++i) {
    const double d = b.diag[i];
    if (!(std::abs(d) > singular_threshold) || d == 0.0)
      throw SingularMatrixError("bidiag_solve: diagonal entry " + std::to_string(i + 1) +
                                " is zero or below the singularity threshold");
    const double carried = i > 0 ? b.sub[i - 1] * y[i - 1] : 0.0;
    y[i] = (rhs[i] - carried) / d;
  }
  return y;
}

/// Best rank-`rank` approximation C = U_r diag(s_1..s_r) V_r^T of the
/// factored matrix.
class TruncatedFactor {
public:
  static constexpr double kIllConditionedRatio = 1e-14;

  TruncatedFactor(SmallSVD source, Index rank) : source_(std::move(source)), rank_(rank) {
    detail::require(rank >= 1 && rank <= source_.singular_values.size(),
                    "TruncatedFactor: rank " + std::to_string(rank) + " out of range [1, " +
                        std::to_string(source_.singular_values.size()) + "]");
  }

  const SmallSVD& source() const noexcept { return source_; }
  Index rank() const noexcept { return rank_; }
  Index rows() const noexcept { return source_.U.rows(); }
  Index cols() const noexcept { return source_.V.rows(); }

  /// s_rank tiny relative to s_1: the pseudo-inverse amplifies noise badly.
  bool ill_conditioned() const {
    const Vector& s = source_.singular_values;
    return s[rank_ - 1] < kIllConditionedRatio * s[0];
  }

  Matrix dense() const {
    return source_.U.leftCols(rank_) * source_.singular_values.head(rank_).asDiagonal() *
           source_.V.leftCols(rank_).transpose();
  }

private:
  SmallSVD source_;
  Index rank_;
};

/// Moore-Penrose pseudo-inverse of the truncated factor applied to `rhs`.
inline Vector truncated_pinv_apply(const TruncatedFactor& f, VectorConstRef rhs) {
  detail::require(rhs.size() == f.rows(), "truncated_pinv_apply: rhs length mismatch");
  const SmallSVD& svd = f.source();
  Vector coeffs = svd.U.leftCols(f.rank()).transpose() * rhs;
  for (Index i = 0; i < f.rank(); ++i) {
    const double s = svd.singular_values[i];
    coeffs[i] = s > 0.0 ? coeffs[i] / s : 0.0;
  }
  return svd.V.leftCols(f.rank()) * coeffs;
}

}  // namespace hybreg
