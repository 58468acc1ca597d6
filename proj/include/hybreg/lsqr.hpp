#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hybreg/bidiag.hpp"
#include "hybreg/errors.hpp"
#include "hybreg/operators.hpp"
#include "hybreg/random.hpp"

namespace hybreg {

struct LsqrConfig {
  /// Relative backward-error tolerance on ||M^T r|| / (||M|| ||r||).
  double tol = 1e-6;
  /// 0 means min(rows, cols).
  Index max_iters = 0;
  /// Stop when ||r|| <= atol_rhs * ||d||; 0 disables the test.
  double atol_rhs = 0.0;
  /// Full reorthogonalization of LSQR's own Golub-Kahan vectors.
  Reorthogonalization reorth = Reorthogonalization::none;
};

enum class LsqrStop { backward_error, residual, max_iters, exact_breakdown };

inline const char* to_string(LsqrStop stop) {
  switch (stop) {
    case LsqrStop::backward_error: return "backward_error";
    case LsqrStop::residual: return "residual";
    case LsqrStop::max_iters: return "max_iters";
    case LsqrStop::exact_breakdown: return "exact_breakdown";
  }
  return "unknown";
}

struct LsqrReport {
  Vector solution;
  Index iterations = 0;
  /// ||M^T r|| / (||M||_est ||r||) from the explicitly recomputed residual at exit.
  double final_backward_error = 0.0;
  double residual_norm = 0.0;
  LsqrStop stop_reason = LsqrStop::max_iters;
  /// Running Frobenius estimate sqrt(sum alpha_j^2 + beta_{j+1}^2).
  double norm_estimate = 0.0;
  /// ||r_j|| per iteration as carried by the recurrences (|phi_bar|).
  std::vector<double> residual_history;
};

namespace detail {

/// Growing column store for optional reorthogonalization.
class KrylovBasis {
public:
  KrylovBasis(Index length, bool enabled) : enabled_(enabled), length_(length) {}

  void push(VectorConstRef v) {
    if (!enabled_) return;
    if (count_ == store_.cols())
      store_.conservativeResize(length_, std::max<Index>(8, 2 * store_.cols()));
    store_.col(count_++) = v;
  }

  void orthogonalize(Vector& v) const {
    if (!enabled_ || count_ == 0) return;
    const auto basis = store_.leftCols(count_);
    for (int pass = 0; pass < 2; ++pass) {
      Vector coeffs = basis.transpose() * v;
      v.noalias() -= basis * coeffs;
    }
  }

private:
  bool enabled_;
  Index length_;
  Index count_ = 0;
  Matrix store_;
};

inline void require_finite(double value, const char* what, Index iteration) {
  if (!std::isfinite(value))
    throw NumericalFailure(std::string("lsqr: non-finite ") + what + " at iteration " +
                           std::to_string(iteration));
}

}  // namespace detail

//-----------------------------------------------------------------------------
/// LSQR (Paige & Saunders) for min ||M z - d|| from z_0 = 0.
///
/// Starting from zero keeps every iterate in range(M^T), so the limit is the
/// minimum-norm least-squares solution. The primary stop is the backward-error
/// test ||M^T r|| <= tol * ||M||_est * ||r||: at exit z solves a perturbed
/// problem (M + E) z ~ d with ||E|| / ||M||_est <= tol. A stop suggested by
/// the recurrences is confirmed against the explicitly recomputed residual,
/// so `final_backward_error <= tol` holds exactly whenever
/// `stop_reason == backward_error`.
//-----------------------------------------------------------------------------
inline LsqrReport lsqr_solve(const LinearOperator& m, VectorConstRef d, const LsqrConfig& cfg) {
  detail::require(cfg.tol > 0.0 && cfg.tol < 1.0, "lsqr: tol must lie in (0, 1)");
  detail::require(cfg.max_iters >= 0, "lsqr: negative max_iters");
  detail::require(cfg.atol_rhs >= 0.0, "lsqr: negative atol_rhs");
  detail::require(d.size() == m.rows(), "lsqr: rhs has length " + std::to_string(d.size()) +
                                            " but operator is " +
                                            detail::dims(m.rows(), m.cols()));
  detail::require(d.allFinite(), "lsqr: rhs has non-finite entries");

  const Index max_iters = cfg.max_iters > 0 ? cfg.max_iters : std::min(m.rows(), m.cols());
  LsqrReport report;
  report.solution = Vector::Zero(m.cols());

  const double d_norm = d.norm();
  if (d_norm == 0.0) {
    report.stop_reason = LsqrStop::exact_breakdown;
    return report;
  }

  const double tiny = BidiagState::kBreakdownFactor * m.frobenius_norm();
  const bool reorth = cfg.reorth == Reorthogonalization::full;
  detail::KrylovBasis u_basis(m.rows(), reorth);
  detail::KrylovBasis v_basis(m.cols(), reorth);

  Vector& x = report.solution;
  Vector u = d / d_norm;
  u_basis.push(u);
  Vector v = m.apply_adjoint(u);
  double alpha = v.norm();
  detail::require_finite(alpha, "alpha", 0);

  double anorm_sq = 0.0;
  // Explicit residual check at a candidate stop; also fills the report.
  auto confirm = [&](double threshold) {
    const Vector r = d - m.apply(x);
    const Vector mtr = m.apply_adjoint(r);
    const double r_norm = r.norm();
    const double anorm = std::sqrt(anorm_sq);
    report.residual_norm = r_norm;
    report.norm_estimate = anorm;
    report.final_backward_error =
        (r_norm == 0.0 || anorm == 0.0) ? 0.0 : mtr.norm() / (anorm * r_norm);
    return report.final_backward_error <= threshold;
  };

  if (alpha <= tiny) {
    // M^T d = 0: z = 0 is already the minimum-norm solution.
    report.residual_norm = d_norm;
    report.stop_reason = LsqrStop::exact_breakdown;
    return report;
  }
  v /= alpha;
  v_basis.push(v);

  Vector w = v;
  Vector mv(m.rows());
  Vector mtu(m.cols());
  double phi_bar = d_norm;
  double rho_bar = alpha;

  for (Index it = 1; it <= max_iters; ++it) {
    m.apply_to(v, mv);
    u = mv - alpha * u;
    u_basis.orthogonalize(u);
    double beta = u.norm();
    detail::require_finite(beta, "beta", it);
    if (beta > tiny) {
      u /= beta;
      u_basis.push(u);
      m.apply_adjoint_to(u, mtu);
      v = mtu - beta * v;
      v_basis.orthogonalize(v);
      anorm_sq += alpha * alpha + beta * beta;
      alpha = v.norm();
      detail::require_finite(alpha, "alpha", it);
      if (alpha > tiny) {
        v /= alpha;
        v_basis.push(v);
      } else {
        alpha = 0.0;
      }
    } else {
      anorm_sq += alpha * alpha;
      beta = 0.0;
      alpha = 0.0;
    }

    // Plane rotation eliminating beta from the lower-bidiagonal system.
    const double rho = std::hypot(rho_bar, beta);
    const double c = rho_bar / rho;
    const double s = beta / rho;
    const double theta = s * alpha;
    rho_bar = -c * alpha;
    const double phi = c * phi_bar;
    phi_bar = s * phi_bar;

    x += (phi / rho) * w;
    w = v - (theta / rho) * w;
    detail::require_finite(x.squaredNorm(), "iterate", it);

    report.iterations = it;
    const double r_norm = std::abs(phi_bar);
    report.residual_history.push_back(r_norm);
    const double anorm = std::sqrt(anorm_sq);
    const double ar_norm = std::abs(alpha * c * phi_bar);
    const bool exhausted = beta == 0.0 || alpha == 0.0;

    const bool backward_candidate = r_norm == 0.0 || ar_norm <= cfg.tol * anorm * r_norm;
    if (backward_candidate && confirm(cfg.tol)) {
      report.stop_reason = LsqrStop::backward_error;
      return report;
    }
    // Compatible systems: the backward-error ratio is meaningless once r is
    // rounding noise, so a working-precision residual floor also ends the run.
    const double floor =
        16.0 * std::numeric_limits<double>::epsilon() * (anorm * x.norm() + d_norm);
    const double residual_target = std::max(cfg.atol_rhs * d_norm, floor);
    if (r_norm <= residual_target) {
      confirm(cfg.tol);
      if (report.residual_norm <= residual_target) {
        report.stop_reason = LsqrStop::residual;
        return report;
      }
    }
    if (exhausted) {
      // The Krylov space is invariant: x is the exact least-squares solution.
      report.stop_reason =
          confirm(cfg.tol) ? LsqrStop::backward_error : LsqrStop::exact_breakdown;
      return report;
    }
  }

  confirm(cfg.tol);
  report.stop_reason = LsqrStop::max_iters;
  return report;
}

/// The running Frobenius estimate LSQR uses for ||M||: sqrt of the sum of
/// squared bidiagonal coefficients after up to `max_steps` Golub-Kahan steps
/// from a fixed pseudo-random start.
inline double operator_norm_estimate(const LinearOperator& m, Index max_steps = 50) {
  Rng rng(0x0a11ce5ULL);
  const Vector start = rng.normal_vector(m.rows());
  BidiagState state = BidiagState::init(m, start, Reorthogonalization::full);
  state.extend(m, std::min({max_steps, m.rows(), m.cols()}));
  double sum = 0.0;
  for (double a : state.alphas()) sum += a * a;
  for (std::size_t i = 1; i < state.betas().size(); ++i) sum += state.betas()[i] * state.betas()[i];
  return std::sqrt(sum);
}

}  // namespace hybreg
