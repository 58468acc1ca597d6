#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hybreg/bidiag.hpp"
#include "hybreg/errors.hpp"
#include "hybreg/hybrid.hpp"
#include "hybreg/lsqr.hpp"
#include "hybreg/metrics.hpp"
#include "hybreg/operators.hpp"
#include "hybreg/problems.hpp"
#include "hybreg/random.hpp"
#include "hybreg/solvers.hpp"

// Invariant and oracle suites. Every check is a scalar compared to a
// threshold, so a run serializes to a small deterministic CSV.

namespace hybreg::verify {

inline constexpr std::uint64_t kDefaultSeed = 20240101;

struct Check {
  std::string criterion;  ///< "AC1" .. "AC8"
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

using Checks = std::vector<Check>;

namespace detail {

inline Check at_most(std::string crit, std::string name, double value, double threshold) {
  return {std::move(crit), std::move(name), value, threshold, value <= threshold};
}

inline Check below(std::string crit, std::string name, double value, double threshold) {
  return {std::move(crit), std::move(name), value, threshold, value < threshold};
}

inline BidiagState run_bidiag(const LinearOperator& a, VectorConstRef b, Index steps) {
  BidiagState s = BidiagState::init(a, b, Reorthogonalization::full);
  s.extend(a, steps);
  return s;
}

/// Largest k whose P_{k+1} column block is fully valid.
inline Index valid_k(const BidiagState& s) {
  const auto bd = s.breakdown();
  if (bd && bd->kind == Breakdown::Kind::beta) return s.k() - 1;
  return s.k();
}

/// Closed-form regularized solution x_R - (L (I - Q Q^T))^+ L x_R with
/// x_R = R^+ b, all through dense SVD pseudo-inverses.
inline Vector elden_oracle(const Matrix& rank_k_approx, const Matrix& l, const Matrix& q,
                           VectorConstRef b) {
  const Vector x = dense_pinv(rank_k_approx) * b;
  const Index n = q.rows();
  const Matrix complement = Matrix::Identity(n, n) - q * q.transpose();
  return x - dense_pinv(l * complement) * (l * x);
}

}  // namespace detail

//-----------------------------------------------------------------------------
// AC1: Golub-Kahan relations and orthogonality with full reorthogonalization.

inline Checks bidiag_exactness(std::uint64_t seed) {
  Checks out;
  Rng rng(seed);
  struct Case {
    std::string name;
    std::shared_ptr<const LinearOperator> a;
    Vector b;
  };
  std::vector<Case> cases;
  cases.push_back({"random_120x90", std::make_shared<DenseOperator>(rng.normal_matrix(120, 90)),
                   rng.normal_vector(120)});
  {
    ProblemInstance p = make_problem("shaw", 64, 1e-2, seed);
    cases.push_back({"shaw64", p.A, p.b});
  }
  for (const auto& c : cases) {
    const Matrix a = materialize(*c.a);
    const double a_norm = a.norm();
    const BidiagState s = detail::run_bidiag(*c.a, c.b, 30);
    const Index k = detail::valid_k(s);
    const BidiagMatrices mats = extract_matrices(s, k);
    const double r1 = (a * s.Q(k) - s.P(k + 1) * mats.B_kplus).norm() / a_norm;
    const double r2 = (a.transpose() * s.P(k) - s.Q(k) * mats.B_k.transpose()).norm() / a_norm;
    const double orth = std::max(orthonormality_defect(s.P(k + 1)), orthonormality_defect(s.Q(k)));
    out.push_back(detail::at_most("AC1", c.name + "/steps", static_cast<double>(k), 30.0));
    out.push_back(detail::at_most("AC1", c.name + "/AQ-PB_rel", r1, 1e-10));
    out.push_back(detail::at_most("AC1", c.name + "/AtP-QBt_rel", r2, 1e-10));
    out.push_back(detail::at_most("AC1", c.name + "/orthogonality", orth, 1e-10));
  }
  return out;
}

//-----------------------------------------------------------------------------
// AC2: rank-k approximation gap orderings against a dense SVD oracle.
// Each value is the largest signed violation over k; it must stay below the
// 1e-10 absolute slack.

inline Checks gamma_orderings(std::uint64_t seed, Index max_k = 15) {
  Checks out;
  constexpr double slack = 1e-10;
  for (const char* name : {"shaw", "heat"}) {
    ProblemInstance p = make_problem(name, 64, 1e-2, seed);
    const DenseOperator a(materialize(*p.A));
    const BidiagState s = detail::run_bidiag(a, p.b, max_k + 2);
    const Index top = std::min(max_k, s.k() - 2);
    std::vector<GammaGapReport> g;
    for (Index k = 1; k <= top + 1; ++k) g.push_back(gamma_gaps(a, s, k));

    double lsqr_vs_cgme = -INFINITY, cgme_vs_prev_lsqr = -INFINITY, cgme_decrease = -INFINITY,
           tcgme_bound = -INFINITY, tcgme_bound_square = -INFINITY;
    for (Index k = 1; k <= top; ++k) {
      const auto& gk = g[static_cast<std::size_t>(k - 1)];
      const auto& gn = g[static_cast<std::size_t>(k)];
      lsqr_vs_cgme = std::max(lsqr_vs_cgme, gk.gamma_lsqr - gk.gamma_cgme);
      if (k >= 2)
        cgme_vs_prev_lsqr = std::max(cgme_vs_prev_lsqr,
                                     gk.gamma_cgme - g[static_cast<std::size_t>(k - 2)].gamma_lsqr);
      cgme_decrease = std::max(cgme_decrease, gn.gamma_cgme - gk.gamma_cgme);
      tcgme_bound = std::max(tcgme_bound, *gk.gamma_tcgme - (gk.theta_min + gn.gamma_cgme));
      tcgme_bound_square =
          std::max(tcgme_bound_square, *gk.gamma_tcgme - (*gk.theta_min_square + gn.gamma_cgme));
    }
    const std::string prefix = std::string(name) + "64/";
    out.push_back(detail::at_most("AC2", prefix + "k_tested_deficit", static_cast<double>(max_k - top),
                                  0.0));
    out.push_back(detail::below("AC2", prefix + "lsqr_lt_cgme", lsqr_vs_cgme, slack));
    out.push_back(detail::below("AC2", prefix + "cgme_lt_prev_lsqr", cgme_vs_prev_lsqr, slack));
    out.push_back(detail::below("AC2", prefix + "cgme_next_lt_cgme", cgme_decrease, slack));
    out.push_back(detail::at_most("AC2", prefix + "tcgme_le_theta_rect", tcgme_bound, slack));
    out.push_back(
        detail::at_most("AC2", prefix + "tcgme_le_theta_square", tcgme_bound_square, slack));
  }
  return out;
}

//-----------------------------------------------------------------------------
// AC3: hybrid iterates against the dense closed form built from explicit
// pseudo-inverses of the rank-k projections.

inline Checks elden_equivalence(std::uint64_t seed) {
  Checks out;
  HybridConfig cfg;
  cfg.inner.tol = 1e-10;
  for (const char* name : {"shaw", "deriv2"}) {
    ProblemInstance p = make_problem(name, 200, 1e-2, seed, RegularizerKind::first_diff_1d);
    const Matrix a = materialize(*p.A);
    const Matrix l = materialize(*p.L);
    const BidiagState s = detail::run_bidiag(*p.A, p.b, 11);
    double worst_cgme = 0.0, worst_tcgme = 0.0;
    for (Index k : {2, 5, 10}) {
      const BidiagMatrices mk = extract_matrices(s, k);
      const Matrix p_cgme = s.P(k) * mk.B_k * s.Q(k).transpose();
      const Matrix p_tcgme = s.P(k + 1) * dense_truncate(*mk.B_kp1, k) *
                             s.Q(k + 1).transpose();
      const Vector ref_c = detail::elden_oracle(p_cgme, l, s.Q(k), p.b);
      const Vector ref_t = detail::elden_oracle(p_tcgme, l, s.Q(k + 1), p.b);
      const Vector x_c = hyb_cgme_step(s, *p.L, k, cfg).x_L;
      const Vector x_t = hyb_tcgme_step(s, *p.L, k, cfg).x_L;
      worst_cgme = std::max(worst_cgme, (x_c - ref_c).norm() / ref_c.norm());
      worst_tcgme = std::max(worst_tcgme, (x_t - ref_t).norm() / ref_t.norm());
    }
    const std::string prefix = std::string(name) + "200/";
    out.push_back(detail::at_most("AC3", prefix + "hyb_cgme_vs_oracle", worst_cgme, 1e-5));
    out.push_back(detail::at_most("AC3", prefix + "hyb_tcgme_vs_oracle", worst_tcgme, 1e-5));
  }
  return out;
}

//-----------------------------------------------------------------------------
// AC4: with L = I the correction vanishes.

inline Checks identity_collapse(std::uint64_t seed) {
  ProblemInstance p = make_problem("shaw", 500, 1e-2, seed, RegularizerKind::identity);
  const BidiagState s = detail::run_bidiag(*p.A, p.b, 21);
  HybridConfig cfg;
  // Past a breakdown the iterates are undefined, so the window ends there.
  const Index top_c = std::min<Index>(20, s.k());
  const Index top_t = std::min<Index>(20, s.k() - 1);
  double worst_c = 0.0, worst_t = 0.0;
  for (Index k = 1; k <= top_c; ++k) {
    const HybridIterate c = hyb_cgme_step(s, *p.L, k, cfg);
    worst_c = std::max(worst_c, (c.x_L - c.x_krylov).norm() / c.x_krylov.norm());
  }
  for (Index k = 1; k <= top_t; ++k) {
    const HybridIterate t = hyb_tcgme_step(s, *p.L, k, cfg);
    worst_t = std::max(worst_t, (t.x_L - t.x_krylov).norm() / t.x_krylov.norm());
  }
  return {detail::at_most("AC4", "shaw500/hyb_cgme_collapse/k<=" + std::to_string(top_c), worst_c, 1e-8),
          detail::at_most("AC4", "shaw500/hyb_tcgme_collapse/k<=" + std::to_string(top_t), worst_t, 1e-8)};
}

//-----------------------------------------------------------------------------
// AC5: kappa(L Q_k^perp) is non-increasing in k, and inner LSQR needs fewer
// iterations as k grows.

inline Checks projected_monotonicity(std::uint64_t seed) {
  Checks out;
  Rng rng(seed ^ 0x5a5a5a5aULL);
  ProblemInstance p = make_problem("deriv2", 200, 1e-2, seed);
  const BidiagState s = detail::run_bidiag(*p.A, p.b, 60);
  const Index top = std::min<Index>(60, s.k());
  out.push_back(detail::at_most("AC5", "deriv2_200/k_tested_deficit", static_cast<double>(60 - top), 0.0));

  const std::vector<std::pair<std::string, Matrix>> regs = {
      {"L1_200", materialize(FirstDifferenceOperator(200))},
      {"random_220x200", rng.normal_matrix(220, 200)},
  };
  for (const auto& [name, l] : regs) {
    double worst = -INFINITY;
    double prev = projected_condition(l, s.Q(2));
    for (Index k = 3; k <= top; ++k) {
      const double cur = projected_condition(l, s.Q(k));
      worst = std::max(worst, (cur - prev) / prev);
      prev = cur;
    }
    out.push_back(detail::at_most("AC5", name + "/kappa_rel_increase", worst, 1e-10));
  }

  ProblemInstance big = make_problem("shaw", 1000, 1e-2, seed);
  HybridConfig cfg;
  for (Method m : {Method::hyb_cgme, Method::hyb_tcgme}) {
    const RunRecord rec = run_hybrid(big, m, cfg, {false, false});
    const std::size_t q = std::max<std::size_t>(1, rec.rows.size() / 4);
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      first += static_cast<double>(rec.rows[i].inner_iterations);
      last += static_cast<double>(rec.rows[rec.rows.size() - 1 - i].inner_iterations);
    }
    first /= static_cast<double>(q);
    last /= static_cast<double>(q);
    out.push_back(detail::at_most("AC5", std::string("shaw1000/") + to_string(m) +
                                             "/inner_iters_last_minus_first_quartile",
                                  last - first, 0.0));
  }
  return out;
}

//-----------------------------------------------------------------------------
// AC6: iterates up to k0 + 3 barely move between inner tol 1e-6 and 1e-10,
// where k0 is the best k at the tight tolerance.

inline Checks tolerance_insensitivity(std::uint64_t seed) {
  Checks out;
  for (const char* name : {"shaw", "heat"}) {
    for (double eps : {1e-1, 1e-2}) {
      ProblemInstance p = make_problem(name, 500, eps, seed);
      for (Method m : {Method::hyb_cgme, Method::hyb_tcgme}) {
        HybridConfig tight;
        tight.inner.tol = 1e-10;
        tight.max_outer_k = 40;
        const RunRecord ref = run_hybrid(p, m, tight, {true, false});
        const Index k0 = ref.curve->best_k;
        HybridConfig loose = tight;
        loose.inner.tol = 1e-6;
        loose.max_outer_k = std::min<Index>(k0 + 3, static_cast<Index>(ref.rows.size()));
        const RunRecord approx = run_hybrid(p, m, loose, {true, false});
        double worst = 0.0;
        for (std::size_t i = 0; i < approx.solutions.size(); ++i)
          worst = std::max(worst, (approx.solutions[i] - ref.solutions[i]).norm() /
                                      ref.solutions[i].norm());
        char label[96];
        std::snprintf(label, sizeof label, "%s500/eps=%g/%s/k0=%ld", name, eps, to_string(m),
                      static_cast<long>(k0));
        out.push_back(detail::at_most("AC6", label, worst, 1e-4));
      }
    }
  }
  return out;
}

//-----------------------------------------------------------------------------
// AC7: desk-scale semi-convergence trends.

inline Checks table_trend(std::uint64_t seed) {
  Checks out;
  HybridConfig cfg;
  cfg.max_outer_k = 30;
  const auto run = [&](const char* name, Method m) {
    return run_hybrid(make_problem(name, 1000, 1e-2, seed), m, cfg, {false, false});
  };
  const RunRecord shaw_c = run("shaw", Method::hyb_cgme);
  const RunRecord shaw_t = run("shaw", Method::hyb_tcgme);
  const RunRecord baart_c = run("baart", Method::hyb_cgme);
  const RunRecord baart_t = run("baart", Method::hyb_tcgme);

  out.push_back(detail::at_most("AC7", "shaw1000/hyb_tcgme_best", shaw_t.curve->best_error, 0.5));
  out.push_back(detail::below("AC7", "shaw1000/hyb_tcgme_minus_hyb_cgme_best",
                              shaw_t.curve->best_error - shaw_c.curve->best_error, 0.0));
  out.push_back(detail::at_most("AC7", "baart1000/hyb_tcgme_best", baart_t.curve->best_error, 0.65));
  const auto interior = [&](const std::string& label, const RunRecord& r) {
    out.push_back(detail::at_most("AC7", label + "/boundary_minimum",
                                  r.curve->interior_minimum ? 0.0 : 1.0, 0.0));
  };
  interior("shaw1000/hyb_cgme", shaw_c);
  interior("shaw1000/hyb_tcgme", shaw_t);
  interior("baart1000/hyb_cgme", baart_c);
  interior("baart1000/hyb_tcgme", baart_t);
  return out;
}

//-----------------------------------------------------------------------------
// AC8: LSQR minimum-norm solutions against dense pseudo-inverses on random
// rank-deficient systems.

inline Checks lsqr_oracle(std::uint64_t seed, int systems = 30) {
  Rng rng(seed ^ 0x15a5ULL);
  const auto draw = [&](Index lo, Index hi) {
    return lo + static_cast<Index>(rng.uniform() * static_cast<double>(hi - lo + 1));
  };
  double worst_err = 0.0, worst_rise = -INFINITY;
  LsqrConfig cfg;
  cfg.tol = 1e-12;
  for (int t = 0; t < systems; ++t) {
    const Index rows = draw(10, 150);
    const Index cols = draw(10, 150);
    const Index rank = draw(1, std::min(rows, cols) - 1);
    const Matrix u = rng.orthonormal_block(rows, rank);
    const Matrix v = rng.orthonormal_block(cols, rank);
    Vector sv(rank);
    for (Index i = 0; i < rank; ++i)
      sv(i) = std::pow(10.0, -2.0 * static_cast<double>(i) / static_cast<double>(std::max<Index>(1, rank - 1)));
    const Matrix a = u * sv.asDiagonal() * v.transpose();
    const Vector b = rng.normal_vector(rows);
    cfg.max_iters = 10 * cols;
    const LsqrReport rep = lsqr_solve(DenseOperator(a), b, cfg);
    const Vector ref = dense_pinv(a, 1e-10) * b;
    worst_err = std::max(worst_err, (rep.solution - ref).norm() / ref.norm());
    const auto& h = rep.residual_history;
    for (std::size_t i = 1; i < h.size(); ++i) worst_rise = std::max(worst_rise, h[i] - h[i - 1]);
  }
  if (worst_rise == -INFINITY) worst_rise = 0.0;
  return {detail::at_most("AC8", "random_rank_deficient/min_norm_rel_error", worst_err, 1e-6),
          detail::at_most("AC8", "random_rank_deficient/residual_rise", worst_rise, 0.0)};
}

//-----------------------------------------------------------------------------

struct Suite {
  std::string criterion;
  std::function<Checks(std::uint64_t)> run;
};

inline std::vector<Suite> suites() {
  return {
      {"AC1", [](std::uint64_t s) { return bidiag_exactness(s); }},
      {"AC2", [](std::uint64_t s) { return gamma_orderings(s); }},
      {"AC3", [](std::uint64_t s) { return elden_equivalence(s); }},
      {"AC4", [](std::uint64_t s) { return identity_collapse(s); }},
      {"AC5", [](std::uint64_t s) { return projected_monotonicity(s); }},
      {"AC6", [](std::uint64_t s) { return tolerance_insensitivity(s); }},
      {"AC7", [](std::uint64_t s) { return table_trend(s); }},
      {"AC8", [](std::uint64_t s) { return lsqr_oracle(s); }},
  };
}

inline Checks run_all(std::uint64_t seed) {
  Checks all;
  for (const auto& suite : suites()) {
    Checks part = suite.run(seed);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

/// check,value,threshold,passed with %.17g numbers; no timings.
inline void write_summary_csv(const Checks& checks, std::ostream& out) {
  out << "check,value,threshold,passed\n";
  char buf[64];
  for (const auto& c : checks) {
    out << c.criterion << '/' << c.name << ',';
    std::snprintf(buf, sizeof buf, "%.17g", c.value);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", c.threshold);
    out << buf << ',' << (c.passed ? "true" : "false") << '\n';
  }
}

inline void write_summary_csv(const Checks& checks, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_summary_csv(checks, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace hybreg::verify
