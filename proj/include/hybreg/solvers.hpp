#pragma once

#include <string>

#include <Eigen/Core>

#include "hybreg/bidiag.hpp"
#include "hybreg/dense_kernels.hpp"
#include "hybreg/errors.hpp"

namespace hybreg {

enum class KrylovMethod { cgme, tcgme };

struct KrylovIterate {
  Vector x;
  Index k = 0;
  KrylovMethod method = KrylovMethod::cgme;
  /// TCGME only: the kept singular values span more than 14 decades.
  bool ill_conditioned_truncation = false;
};

namespace detail {

inline void require_steps(const BidiagState& state, Index needed, const char* who) {
  if (state.k() >= needed) return;
  if (state.breakdown())
    throw BreakdownError(std::string(who) + ": bidiagonalization broke down; last valid k is " +
                             std::to_string(state.k()),
                         state.breakdown()->step);
  throw ContractViolation(std::string(who) + ": needs " + std::to_string(needed) +
                          " bidiagonalization steps, state has " + std::to_string(state.k()));
}

}  // namespace detail

/// x_k = Q_k B_k^{-1} (beta_1 e_1), using P_k^T b = beta_1 e_1.
inline KrylovIterate cgme_iterate(const BidiagState& state, Index k) {
  detail::require(k >= 1, "cgme_iterate: k must be at least 1");
  detail::require_steps(state, k, "cgme_iterate");
  Vector rhs = Vector::Zero(k);
  rhs[0] = state.beta1();
  const Vector y = bidiag_solve(state.lower_bidiagonal(k), rhs);
  return KrylovIterate{state.Q(k) * y, k, KrylovMethod::cgme, false};
}

/// x_k = Q_{k+1} C_k^+ (beta_1 e_1), where C_k is the best rank-k
/// approximation of the square (k+1) x (k+1) block B_{k+1}.
inline KrylovIterate tcgme_iterate(const BidiagState& state, Index k) {
  detail::require(k >= 1, "tcgme_iterate: k must be at least 1");
  detail::require_steps(state, k + 1, "tcgme_iterate");
  const TruncatedFactor c_k(svd_small(state.lower_bidiagonal(k + 1).dense()), k);
  Vector rhs = Vector::Zero(k + 1);
  rhs[0] = state.beta1();
  const Vector y = truncated_pinv_apply(c_k, rhs);
  return KrylovIterate{state.Q(k + 1) * y, k, KrylovMethod::tcgme, c_k.ill_conditioned()};
}

}  // namespace hybreg
