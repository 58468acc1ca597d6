// Deblurs a small blocky image with both hybrid methods and prints the
// convergence curves; the blurred problem is also round-tripped through the
// binary problem format.

#include <cstdio>
#include <sstream>

#include "hybreg/hybreg.hpp"

int main(int argc, char** argv) {
  using namespace hybreg;
  const Index side = argc > 1 ? std::stol(argv[1]) : 32;
  const double eps = argc > 2 ? std::stod(argv[2]) : 1e-2;

  ProblemInstance problem = make_problem("blur2d", side, eps, 7);
  std::stringstream blob;
  write_problem(problem, blob);
  problem = read_problem(blob);
  std::printf("blur2d %ldx%ld, sigma=%.1f, eps=%g, L=%s\n", static_cast<long>(side),
              static_cast<long>(side), kDefaultPsfSigma, eps, to_string(problem.L_kind));

  HybridConfig cfg;
  cfg.max_outer_k = 40;
  for (Method m : {Method::cgme, Method::hyb_cgme, Method::tcgme, Method::hyb_tcgme}) {
    const RunRecord rec = run_hybrid(problem, m, cfg);
    std::printf("\n%-10s best k=%ld  rel.error=%.4f  (%.0f ms)\n", to_string(m),
                static_cast<long>(rec.curve->best_k), rec.curve->best_error, rec.total_wall_ms);
    for (const auto& row : rec.rows)
      if (row.k % 5 == 0 || row.k == rec.curve->best_k)
        std::printf("  k=%-3ld %.4f  inner=%ld\n", static_cast<long>(row.k), row.rel_error,
                    static_cast<long>(row.inner_iterations));
  }
  return 0;
}
