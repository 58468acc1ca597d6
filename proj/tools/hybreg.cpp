// Command-line front end: run experiments, run the verification suites, list
// problem generators. Fatal errors go to stderr as one JSON object with exit
// code 2; a run that fails inside an experiment is reported the same way as a
// warning and the exit code is 1.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hybreg/harness.hpp"
#include "hybreg/verify.hpp"

namespace {

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const hybreg::ContractViolation*>(&e)) return "contract_violation";
  if (dynamic_cast<const hybreg::BreakdownError*>(&e)) return "breakdown";
  if (dynamic_cast<const hybreg::SingularMatrixError*>(&e)) return "singular_matrix";
  if (dynamic_cast<const hybreg::NumericalFailure*>(&e)) return "numerical_failure";
  if (dynamic_cast<const hybreg::UndefinedMetricError*>(&e)) return "undefined_metric";
  if (dynamic_cast<const hybreg::OracleSizeError*>(&e)) return "oracle_size";
  if (dynamic_cast<const hybreg::IoError*>(&e)) return "io_error";
  return "error";
}

int fail(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return 2;
}

struct RunArgs {
  std::string problem = "shaw";
  long n = 1000;
  std::vector<double> eps;
  unsigned long long seed = hybreg::kDefaultExperimentSeed;
  std::vector<std::string> methods;
  std::string L;
  long max_k = 30;
  double tol = 1e-6;
  std::string out;
  std::string config;
  bool no_timings = false;
  int jobs = 1;
};

int cmd_run(const RunArgs& a, const CLI::App& sub) {
  hybreg::ExperimentSpec spec;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw hybreg::IoError("cannot open config '" + a.config + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw hybreg::ContractViolation("config '" + a.config + "' is not valid JSON: " + e.what());
    }
    spec = hybreg::spec_from_json(j);
  }
  // Flags given on the command line override the config file.
  const auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--problem")) spec.problem = a.problem;
  if (given("--n")) spec.n = a.n;
  if (given("--eps")) spec.epsilons = a.eps;
  if (given("--seed")) spec.seed = a.seed;
  if (given("--method")) {
    spec.methods.clear();
    for (const auto& m : a.methods) spec.methods.push_back(hybreg::method_from_string(m));
  }
  if (given("--L")) spec.L = hybreg::regularizer_from_string(a.L);
  if (given("--max-k")) spec.max_outer_k = a.max_k;
  if (given("--tol")) spec.inner_tol = a.tol;
  if (given("--jobs")) spec.jobs = a.jobs;
  if (a.no_timings) spec.record_timings = false;
  spec.validate();

  const auto records = hybreg::run_experiment(spec);
  if (a.out.empty()) {
    hybreg::emit_csv(records, std::cout);
  } else {
    hybreg::emit_csv(records, a.out + ".csv");
    hybreg::emit_summary_csv(records, a.out + "_summary.csv");
    hybreg::emit_json(records, a.out + ".json");
  }
  int status = 0;
  for (const auto& r : records) {
    if (!r.error) continue;
    status = 1;
    std::cerr << nlohmann::json{{"warning", "run_failed"},
                                  {"method", hybreg::to_string(r.run.method)},
                                  {"epsilon", r.epsilon},
                                  {"message", *r.error}}
                       .dump()
              << '\n';
  }
  return status;
}

int cmd_verify(unsigned long long seed, const std::string& out, bool quiet) {
  hybreg::verify::Checks checks;
  for (const auto& suite : hybreg::verify::suites()) {
    auto part = suite.run(seed);
    if (!quiet)
      for (const auto& c : part)
        std::fprintf(stderr, "%s %s/%s value=%.6g threshold=%.6g\n", c.passed ? "ok  " : "FAIL",
                     c.criterion.c_str(), c.name.c_str(), c.value, c.threshold);
    checks.insert(checks.end(), part.begin(), part.end());
  }
  if (out.empty())
    hybreg::verify::write_summary_csv(checks, std::cout);
  else
    hybreg::verify::write_summary_csv(checks, out);
  for (const auto& c : checks)
    if (!c.passed) return 1;
  return 0;
}

int cmd_list() {
  for (const auto& p : hybreg::list_problems())
    std::printf("%-8s %s%s\n", p.name.c_str(), p.description.c_str(),
                p.requires_even ? " (n even)" : "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybreg: Krylov hybrid regularization experiments"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "sweep outer iterations and emit per-k curves");
  run_cmd->add_option("--problem", run.problem, "shaw | baart | heat | deriv2 | blur2d");
  run_cmd->add_option("--n", run.n, "problem size (grid side for blur2d)");
  run_cmd->add_option("--eps", run.eps, "relative noise level(s) in (0,1)");
  run_cmd->add_option("--seed", run.seed, "noise seed");
  run_cmd->add_option("--method", run.methods, "cgme | tcgme | hyb_cgme | hyb_tcgme (repeatable)");
  run_cmd->add_option("--L", run.L, "identity | first_diff_1d | first_diff_2d");
  run_cmd->add_option("--max-k", run.max_k, "outer iterations");
  run_cmd->add_option("--tol", run.tol, "inner LSQR backward-error tolerance");
  run_cmd->add_option("--out", run.out, "output prefix: writes PREFIX.csv, PREFIX_summary.csv, PREFIX.json");
  run_cmd->add_option("--config", run.config, "JSON experiment spec; flags override it");
  run_cmd->add_option("--jobs", run.jobs, "parallel workers");
  run_cmd->add_flag("--no-timings", run.no_timings, "record wall_ms as 0 for byte-stable output");

  unsigned long long verify_seed = hybreg::verify::kDefaultSeed;
  std::string verify_out;
  bool verify_quiet = false;
  auto* verify_cmd = app.add_subcommand("verify", "run the invariant and oracle suites");
  verify_cmd->add_option("--seed", verify_seed, "seed for random cases and noise");
  verify_cmd->add_option("--out", verify_out, "summary CSV path (default stdout)");
  verify_cmd->add_flag("--quiet", verify_quiet, "no per-check progress on stderr");

  auto* list_cmd = app.add_subcommand("list-problems", "list problem generators");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what());
  }

  try {
    if (*run_cmd) return cmd_run(run, *run_cmd);
    if (*verify_cmd) return cmd_verify(verify_seed, verify_out, verify_quiet);
    if (*list_cmd) return cmd_list();
  } catch (const std::exception& e) {
    return fail(error_kind(e), e.what());
  }
  return 0;
}
