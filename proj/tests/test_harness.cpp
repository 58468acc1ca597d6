#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

using namespace hybreg;
namespace fs = std::filesystem;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.problem = "heat";
  s.n = 64;
  s.epsilons = {1e-1, 1e-2};
  s.max_outer_k = 5;
  s.record_timings = false;
  return s;
}

std::string csv_of(const std::vector<ExperimentRecord>& recs) {
  std::ostringstream out;
  emit_csv(recs, out);
  return out.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hybreg_harness_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Spec, Validation) {
  ExperimentSpec s = small_spec();
  s.methods.clear();
  try {
    s.validate();
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_STREQ(e.what(), "no methods");
  }
  s = small_spec();
  s.epsilons = {1.5};
  EXPECT_THROW(s.validate(), ContractViolation);
  s.epsilons = {0.0};
  EXPECT_THROW(s.validate(), ContractViolation);
  s = small_spec();
  s.problem = "gravity";
  EXPECT_THROW(s.validate(), ContractViolation);
  EXPECT_NO_THROW(small_spec().validate());
}

TEST(Spec, JsonRoundTrip) {
  ExperimentSpec s = small_spec();
  s.L = RegularizerKind::identity;
  s.methods = {Method::tcgme};
  const ExperimentSpec t = spec_from_json(to_json(s));
  EXPECT_EQ(t.problem, s.problem);
  EXPECT_EQ(t.n, s.n);
  EXPECT_EQ(t.epsilons, s.epsilons);
  EXPECT_EQ(t.methods, s.methods);
  EXPECT_EQ(t.L, s.L);
  EXPECT_EQ(t.record_timings, false);
}

TEST(Spec, ConfigParsing) {
  const auto j = nlohmann::json::parse(R"({"problem":"baart","epsilon":0.05,"methods":["hyb-cgme"]})");
  const ExperimentSpec s = spec_from_json(j);
  EXPECT_EQ(s.problem, "baart");
  EXPECT_EQ(s.epsilons, std::vector<double>{0.05});
  EXPECT_EQ(s.methods, std::vector<Method>{Method::hyb_cgme});
  EXPECT_THROW(spec_from_json(nlohmann::json::parse(R"({"n":"big"})")), ContractViolation);
  EXPECT_THROW(spec_from_json(nlohmann::json::array()), ContractViolation);
}

TEST(Emit, HeadersOnlyForNoRecords) {
  std::ostringstream a, b;
  emit_csv({}, a);
  emit_summary_csv({}, b);
  EXPECT_EQ(a.str(), "method,problem,n,epsilon,seed,k,rel_error,inner_iters,wall_ms\n");
  EXPECT_EQ(b.str(), "method,problem,epsilon,best_k,best_error,total_wall_ms\n");
}

TEST(Emit, RowsAndSummary) {
  const auto recs = run_experiment(small_spec());
  ASSERT_EQ(recs.size(), 4u);
  const std::string csv = csv_of(recs);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 5);
  EXPECT_NE(csv.find("\nhyb_cgme,heat,64,0.10000000000000001,20240101,1,"), std::string::npos);
  std::ostringstream summary;
  emit_summary_csv(recs, summary);
  const std::string text = summary.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(Emit, JsonRoundTripPreservesCurves) {
  const auto recs = run_experiment(small_spec());
  const auto back = records_from_json(nlohmann::json::parse(to_json(recs).dump()));
  ASSERT_EQ(back.size(), recs.size());
  EXPECT_EQ(csv_of(back), csv_of(recs));
  EXPECT_EQ(back[0].best_k(), recs[0].best_k());
  EXPECT_EQ(back[3].run.method, recs[3].run.method);
}

TEST(Emit, NanWrittenAsNull) {
  ExperimentRecord r;
  r.problem = "shaw";
  r.run.rows.push_back(IterationRow{});
  const auto j = to_json(r);
  EXPECT_TRUE(j.at("rows")[0].at("rel_error").is_null());
  EXPECT_TRUE(j.at("best_error").is_null());
  EXPECT_TRUE(std::isnan(record_from_json(j).run.rows[0].rel_error));
}

TEST(Experiment, DeterministicBytes) {
  EXPECT_EQ(csv_of(run_experiment(small_spec())), csv_of(run_experiment(small_spec())));
}

TEST(Experiment, ParallelMatchesSerial) {
  ExperimentSpec par = small_spec();
  par.jobs = 3;
  par.methods = {Method::cgme, Method::tcgme, Method::hyb_cgme, Method::hyb_tcgme};
  ExperimentSpec ser = par;
  ser.jobs = 1;
  EXPECT_EQ(csv_of(run_experiment(par)), csv_of(run_experiment(ser)));
}

TEST(Experiment, FailuresAreRecordedPerRun) {
  ExperimentSpec s = small_spec();
  s.L = RegularizerKind::first_diff_2d;
  const auto recs = run_experiment(s);
  ASSERT_EQ(recs.size(), 4u);
  for (const auto& r : recs) {
    ASSERT_TRUE(r.error);
    EXPECT_NE(r.error->find("first_diff_2d"), std::string::npos);
    EXPECT_TRUE(r.run.rows.empty());
  }
  EXPECT_EQ(csv_of(recs), std::string(kCurveCsvHeader) + "\n");
}

TEST(Experiment, BreakdownIsTruncationNotFailure) {
  ExperimentSpec s = small_spec();
  s.problem = "shaw";
  s.n = 32;
  s.epsilons = {1e-2};
  s.max_outer_k = 40;
  const auto recs = run_experiment(s);
  for (const auto& r : recs) {
    EXPECT_FALSE(r.error);
    ASSERT_TRUE(r.run.truncation);
    EXPECT_LT(static_cast<Index>(r.run.rows.size()), 40);
  }
}

TEST(Io, PathErrorsCarryThePath) {
  const std::string bad = "/nonexistent/dir/out.csv";
  try {
    emit_csv({}, bad);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(bad), std::string::npos);
  }
  EXPECT_THROW(emit_json({}, bad), IoError);
  EXPECT_THROW(load_records_json(bad), IoError);
  const fs::path junk = scratch("junk.json");
  std::ofstream(junk) << "{not json";
  EXPECT_THROW(load_records_json(junk.string()), IoError);
}

TEST(Io, FileRoundTrip) {
  const auto recs = run_experiment(small_spec());
  const fs::path p = scratch("records.json");
  emit_json(recs, p.string());
  EXPECT_EQ(csv_of(load_records_json(p.string())), csv_of(recs));
}

#ifdef HYBREG_CLI_PATH
namespace {

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(HYBREG_CLI_PATH) + " " + args + " 2> " + err.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, UsageErrorIsJson) {
  const fs::path err = scratch("cli_err.txt");
  EXPECT_EQ(run_cli("run --method nope", err), 2);
  const auto j = nlohmann::json::parse(slurp(err));
  EXPECT_EQ(j.at("error"), "contract_violation");
  EXPECT_EQ(j.at("message"), "unknown method 'nope'");
}

TEST(Cli, BadEpsilonIsJson) {
  const fs::path err = scratch("cli_err2.txt");
  EXPECT_EQ(run_cli("run --eps 2 --n 16", err), 2);
  const auto j = nlohmann::json::parse(slurp(err));
  EXPECT_NE(j.at("message").get<std::string>().find("epsilon"), std::string::npos);
}

TEST(Cli, OutputPrefixWritesThreeFiles) {
  const fs::path prefix = scratch("cli_run");
  const fs::path err = scratch("cli_err3.txt");
  ASSERT_EQ(run_cli("run --problem deriv2 --n 40 --max-k 3 --no-timings --out " + prefix.string(), err), 0);
  const std::string csv = slurp(prefix.string() + ".csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCurveCsvHeader);
  EXPECT_EQ(load_records_json(prefix.string() + ".json").size(), 2u);
  EXPECT_TRUE(fs::exists(prefix.string() + "_summary.csv"));
}

TEST(Cli, ConfigFileWithOverride) {
  const fs::path cfg = scratch("cfg.json");
  std::ofstream(cfg) << R"({"problem":"heat","n":32,"max_outer_k":2,"record_timings":false,"methods":["cgme"]})";
  const fs::path prefix = scratch("cli_cfg");
  const fs::path err = scratch("cli_err4.txt");
  ASSERT_EQ(run_cli("run --config " + cfg.string() + " --max-k 3 --out " + prefix.string(), err), 0);
  const auto recs = load_records_json(prefix.string() + ".json");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].problem, "heat");
  EXPECT_EQ(recs[0].run.rows.size(), 3u);
}
#endif
