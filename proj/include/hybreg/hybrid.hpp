#pragma once

#include <algorithm>
#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hybreg/bidiag.hpp"
#include "hybreg/errors.hpp"
#include "hybreg/lsqr.hpp"
#include "hybreg/metrics.hpp"
#include "hybreg/operators.hpp"
#include "hybreg/problems.hpp"
#include "hybreg/solvers.hpp"

// hyb-CGME and hyb-TCGME: x_{L,k} = x_k - z_k, where x_k is the CGME or TCGME
// iterate and z_k is the minimum-norm solution of
//   min_z || L (I - Q Q^T) z - L x_k ||
// with Q = Q_k (hyb-CGME) or Q_{k+1} (hyb-TCGME). The correction only moves
// x_k inside range(Q)^perp, which is the null space of the rank-k projection
// of A, so the projected data fit is untouched while ||L x|| is minimized.

namespace hybreg {

enum class HybridMethod { hyb_cgme, hyb_tcgme };

/// Everything a run can sweep: the two Krylov stages alone and the hybrids.
enum class Method { cgme, tcgme, hyb_cgme, hyb_tcgme };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::cgme: return "cgme";
    case Method::tcgme: return "tcgme";
    case Method::hyb_cgme: return "hyb_cgme";
    case Method::hyb_tcgme: return "hyb_tcgme";
  }
  return "unknown";
}

inline Method method_from_string(const std::string& name) {
  if (name == "cgme") return Method::cgme;
  if (name == "tcgme") return Method::tcgme;
  if (name == "hyb_cgme" || name == "hyb-cgme") return Method::hyb_cgme;
  if (name == "hyb_tcgme" || name == "hyb-tcgme") return Method::hyb_tcgme;
  throw ContractViolation("unknown method '" + name + "'");
}

struct HybridConfig {
  LsqrConfig inner{};
  Index max_outer_k = 30;
  Reorthogonalization reorth = Reorthogonalization::full;
};

struct InnerSolution {
  Vector z;
  LsqrReport report;
  /// LSQR stopped on its iteration cap rather than a convergence test.
  bool capped = false;
};

/// Inner LSQR iterations are capped at 2 (n - k): the exact-arithmetic
/// termination bound n - k plus the same again for rounding.
inline Index inner_iteration_cap(Index n, Index k_cols) {
  return std::max<Index>(1, 2 * (n - k_cols));
}

/// Minimum-norm z for min || L (I - Q Q^T) z - L x_k ||, by LSQR over the
/// implicit projected operator, started from zero.
inline InnerSolution inner_solve(const LinearOperator& l, const Eigen::Ref<const Matrix>& q,
                                 VectorConstRef x_k, const LsqrConfig& cfg) {
  detail::require(q.rows() == l.cols(), "inner_solve: Q rows must equal L cols");
  detail::require(x_k.size() == l.cols(), "inner_solve: x_k length mismatch");
  const ProjectedOperator projected(l, Matrix(q));
  const Vector rhs = l.apply(x_k);

  LsqrConfig c = cfg;
  const Index cap = inner_iteration_cap(l.cols(), q.cols());
  c.max_iters = cfg.max_iters > 0 ? std::min(cfg.max_iters, cap) : cap;

  InnerSolution out;
  out.report = lsqr_solve(projected, rhs, c);
  out.z = out.report.solution;
  out.capped = out.report.stop_reason == LsqrStop::max_iters;
  return out;
}

struct HybridIterate {
  Vector x_L;
  Vector x_krylov;  ///< x_k before the correction
  Index k = 0;
  HybridMethod method = HybridMethod::hyb_cgme;
  Index inner_iterations = 0;
  double inner_backward_error = 0.0;
  LsqrStop inner_stop = LsqrStop::exact_breakdown;
  bool inner_capped = false;
};

namespace detail {

inline HybridIterate finish(KrylovIterate it, const InnerSolution& inner, HybridMethod method) {
  HybridIterate out;
  out.x_L = it.x - inner.z;
  out.x_krylov = std::move(it.x);
  out.k = it.k;
  out.method = method;
  out.inner_iterations = inner.report.iterations;
  out.inner_backward_error = inner.report.final_backward_error;
  out.inner_stop = inner.report.stop_reason;
  out.inner_capped = inner.capped;
  return out;
}

}  // namespace detail

/// hyb-CGME at outer step k; the state must hold at least k steps.
inline HybridIterate hyb_cgme_step(const BidiagState& state, const LinearOperator& l, Index k,
                                   const HybridConfig& cfg) {
  KrylovIterate it = cgme_iterate(state, k);
  const InnerSolution inner = inner_solve(l, state.Q(k), it.x, cfg.inner);
  return detail::finish(std::move(it), inner, HybridMethod::hyb_cgme);
}

/// hyb-TCGME at outer step k; the state must hold at least k+1 steps.
inline HybridIterate hyb_tcgme_step(const BidiagState& state, const LinearOperator& l, Index k,
                                    const HybridConfig& cfg) {
  KrylovIterate it = tcgme_iterate(state, k);
  const InnerSolution inner = inner_solve(l, state.Q(k + 1), it.x, cfg.inner);
  return detail::finish(std::move(it), inner, HybridMethod::hyb_tcgme);
}

//-----------------------------------------------------------------------------

struct IterationRow {
  Index k = 0;
  double rel_error = std::numeric_limits<double>::quiet_NaN();
  Index inner_iterations = 0;
  double inner_backward_error = 0.0;
  bool inner_capped = false;
  double wall_ms = 0.0;
};

struct RunRecord {
  Method method = Method::hyb_cgme;
  std::vector<IterationRow> rows;
  /// Per-k solutions, kept only when requested.
  std::vector<Vector> solutions;
  /// Present when x_true is known; best_k is the oracle choice.
  std::optional<ErrorCurve> curve;
  double total_wall_ms = 0.0;
  /// Why the sweep ended before max_outer_k, if it did.
  std::optional<std::string> truncation;
};

struct RunOptions {
  bool keep_solutions = false;
  bool record_timings = true;
};

/// Sweeps k = 1..max_outer_k, extending the bidiagonalization incrementally.
inline RunRecord run_hybrid(const ProblemInstance& problem, Method method, const HybridConfig& cfg,
                            const RunOptions& opts = {}) {
  detail::require(cfg.max_outer_k >= 1, "run_hybrid: max_outer_k must be at least 1");
  detail::require(problem.A && problem.L, "run_hybrid: problem has no operators");
  using clock = std::chrono::steady_clock;
  const auto ms_since = [&](clock::time_point t0) {
    return opts.record_timings
               ? std::chrono::duration<double, std::milli>(clock::now() - t0).count()
               : 0.0;
  };

  const LinearOperator& a = *problem.A;
  const LinearOperator& l = *problem.L;
  const bool has_truth = problem.x_true.size() == a.cols();
  const bool truncated = method == Method::tcgme || method == Method::hyb_tcgme;

  RunRecord rec;
  rec.method = method;
  const auto run_start = clock::now();
  BidiagState state = BidiagState::init(a, problem.b, cfg.reorth);

  for (Index k = 1; k <= cfg.max_outer_k; ++k) {
    const auto t0 = clock::now();
    const Index needed = truncated ? k + 1 : k;
    if (state.k() < needed && !state.breakdown()) state.extend(a, needed - state.k());
    if (state.k() < needed) {
      rec.truncation = "bidiagonalization broke down at step " +
                       std::to_string(state.breakdown()->step) + "; sweep stopped before k = " +
                       std::to_string(k);
      break;
    }

    IterationRow row;
    row.k = k;
    Vector x;
    switch (method) {
      case Method::cgme: x = cgme_iterate(state, k).x; break;
      case Method::tcgme: x = tcgme_iterate(state, k).x; break;
      case Method::hyb_cgme:
      case Method::hyb_tcgme: {
        HybridIterate it = method == Method::hyb_cgme ? hyb_cgme_step(state, l, k, cfg)
                                                      : hyb_tcgme_step(state, l, k, cfg);
        row.inner_iterations = it.inner_iterations;
        row.inner_backward_error = it.inner_backward_error;
        row.inner_capped = it.inner_capped;
        x = std::move(it.x_L);
        break;
      }
    }
    if (has_truth) row.rel_error = relative_error(l, x, problem.x_true);
    row.wall_ms = ms_since(t0);
    rec.rows.push_back(row);
    if (opts.keep_solutions) rec.solutions.push_back(std::move(x));
  }

  rec.total_wall_ms = ms_since(run_start);
  if (has_truth && !rec.rows.empty()) {
    std::vector<double> errs;
    std::vector<Index> ks;
    for (const auto& r : rec.rows) {
      errs.push_back(r.rel_error);
      ks.push_back(r.k);
    }
    rec.curve = analyze_curve(std::move(errs), std::move(ks));
  }
  return rec;
}

}  // namespace hybreg
