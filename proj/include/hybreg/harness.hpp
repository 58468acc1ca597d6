#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybreg/errors.hpp"
#include "hybreg/hybrid.hpp"
#include "hybreg/problems.hpp"

namespace hybreg {

inline constexpr std::uint64_t kDefaultExperimentSeed = 20240101;

namespace detail {

inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

struct ExperimentSpec {
  std::string problem = "shaw";
  /// Generator size: n for 1-D problems, grid side N for blur2d.
  Index n = 1000;
  std::vector<double> epsilons{1e-2};
  std::uint64_t seed = kDefaultExperimentSeed;
  std::vector<Method> methods{Method::hyb_cgme, Method::hyb_tcgme};
  std::optional<RegularizerKind> L;
  Index max_outer_k = 30;
  double inner_tol = 1e-6;
  bool record_timings = true;
  /// Worker threads for independent (method, epsilon) runs.
  int jobs = 1;

  void validate() const {
    if (methods.empty()) throw ContractViolation("no methods");
    if (epsilons.empty()) throw ContractViolation("no noise levels");
    const auto& known = list_problems();
    const bool exists = std::any_of(known.begin(), known.end(),
                                    [&](const ProblemInfo& p) { return p.name == problem; });
    if (!exists) throw ContractViolation("unknown problem '" + problem + "'");
    for (double e : epsilons)
      if (!(e > 0.0 && e < 1.0))
        throw ContractViolation("epsilon must lie in (0, 1), got " + detail::fmt_real(e));
    detail::require(n >= 2, "n must be at least 2");
    detail::require(max_outer_k >= 1, "max_outer_k must be at least 1");
    detail::require(inner_tol > 0.0 && inner_tol < 1.0, "inner tol must lie in (0, 1)");
    detail::require(jobs >= 1, "jobs must be at least 1");
  }
};

inline nlohmann::json to_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["problem"] = s.problem;
  j["n"] = s.n;
  j["epsilons"] = s.epsilons;
  j["seed"] = s.seed;
  std::vector<std::string> methods;
  for (Method m : s.methods) methods.emplace_back(to_string(m));
  j["methods"] = methods;
  j["L"] = s.L ? nlohmann::json(to_string(*s.L)) : nlohmann::json(nullptr);
  j["max_outer_k"] = s.max_outer_k;
  j["inner_tol"] = s.inner_tol;
  j["record_timings"] = s.record_timings;
  j["jobs"] = s.jobs;
  return j;
}

/// Missing keys keep their defaults; "epsilon" is accepted for a single level.
inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ContractViolation("experiment config must be a JSON object");
  ExperimentSpec s;
  try {
    if (j.contains("problem")) s.problem = j.at("problem").get<std::string>();
    if (j.contains("n")) s.n = j.at("n").get<Index>();
    if (j.contains("epsilons")) s.epsilons = j.at("epsilons").get<std::vector<double>>();
    if (j.contains("epsilon")) s.epsilons = {j.at("epsilon").get<double>()};
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("methods")) {
      s.methods.clear();
      for (const auto& m : j.at("methods")) s.methods.push_back(method_from_string(m.get<std::string>()));
    }
    if (j.contains("L") && !j.at("L").is_null())
      s.L = regularizer_from_string(j.at("L").get<std::string>());
    if (j.contains("max_outer_k")) s.max_outer_k = j.at("max_outer_k").get<Index>();
    if (j.contains("inner_tol")) s.inner_tol = j.at("inner_tol").get<double>();
    if (j.contains("record_timings")) s.record_timings = j.at("record_timings").get<bool>();
    if (j.contains("jobs")) s.jobs = j.at("jobs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("bad experiment config: ") + e.what());
  }
  return s;
}

/// One (method, epsilon) run together with the settings that produced it.
struct ExperimentRecord {
  std::string problem;
  Index n = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::string L;
  Index max_outer_k = 0;
  double inner_tol = 0.0;
  RunRecord run;
  /// Set when the run failed; rows are then empty.
  std::optional<std::string> error;

  Index best_k() const { return run.curve ? run.curve->best_k : 0; }
  double best_error() const {
    return run.curve ? run.curve->best_error : std::numeric_limits<double>::quiet_NaN();
  }
};

/// Runs every (method, epsilon) pair. Failures are captured per record.
inline std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  struct Task {
    Method method;
    double epsilon;
  };
  std::vector<Task> tasks;
  for (double eps : spec.epsilons)
    for (Method m : spec.methods) tasks.push_back({m, eps});

  std::vector<ExperimentRecord> records(tasks.size());
  const auto work = [&](std::size_t i) {
    ExperimentRecord& rec = records[i];
    rec.problem = spec.problem;
    rec.n = spec.n;
    rec.epsilon = tasks[i].epsilon;
    rec.seed = spec.seed;
    rec.L = to_string(spec.L.value_or(default_regularizer(spec.problem)));
    rec.max_outer_k = spec.max_outer_k;
    rec.inner_tol = spec.inner_tol;
    rec.run.method = tasks[i].method;
    try {
      const ProblemInstance p = make_problem(spec.problem, spec.n, tasks[i].epsilon, spec.seed, spec.L);
      HybridConfig cfg;
      cfg.inner.tol = spec.inner_tol;
      cfg.max_outer_k = spec.max_outer_k;
      rec.run = run_hybrid(p, tasks[i].method, cfg, {false, spec.record_timings});
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), tasks.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) work(i);
      });
    for (auto& t : pool) t.join();
  }
  return records;
}

//-----------------------------------------------------------------------------
// Output. Reals are written with %.17g so values round-trip exactly.

namespace detail {

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline double real_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline constexpr const char* kCurveCsvHeader =
    "method,problem,n,epsilon,seed,k,rel_error,inner_iters,wall_ms";
inline constexpr const char* kSummaryCsvHeader =
    "method,problem,epsilon,best_k,best_error,total_wall_ms";

inline void emit_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << kCurveCsvHeader << '\n';
  for (const auto& r : records)
    for (const auto& row : r.run.rows)
      out << to_string(r.run.method) << ',' << r.problem << ',' << r.n << ','
          << detail::fmt_real(r.epsilon) << ',' << r.seed << ',' << row.k << ','
          << detail::fmt_real(row.rel_error) << ',' << row.inner_iterations << ','
          << detail::fmt_real(row.wall_ms) << '\n';
}

inline void emit_summary_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << kSummaryCsvHeader << '\n';
  for (const auto& r : records)
    out << to_string(r.run.method) << ',' << r.problem << ',' << detail::fmt_real(r.epsilon) << ','
        << r.best_k() << ',' << detail::fmt_real(r.best_error()) << ','
        << detail::fmt_real(r.run.total_wall_ms) << '\n';
}

inline nlohmann::json to_json(const ExperimentRecord& r) {
  const auto real = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.run.rows)
    rows.push_back({{"k", row.k},
                    {"rel_error", real(row.rel_error)},
                    {"inner_iterations", row.inner_iterations},
                    {"inner_backward_error", row.inner_backward_error},
                    {"inner_capped", row.inner_capped},
                    {"wall_ms", row.wall_ms}});
  nlohmann::json j;
  j["method"] = to_string(r.run.method);
  j["problem"] = r.problem;
  j["n"] = r.n;
  j["epsilon"] = r.epsilon;
  j["seed"] = r.seed;
  j["L"] = r.L;
  j["max_outer_k"] = r.max_outer_k;
  j["inner_tol"] = r.inner_tol;
  j["rows"] = std::move(rows);
  j["best_k"] = r.best_k();
  j["best_error"] = real(r.best_error());
  j["interior_minimum"] = r.run.curve ? r.run.curve->interior_minimum : false;
  j["total_wall_ms"] = r.run.total_wall_ms;
  j["truncation"] = r.run.truncation ? nlohmann::json(*r.run.truncation) : nlohmann::json(nullptr);
  j["error"] = r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr);
  return j;
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
  ExperimentRecord r;
  r.problem = j.at("problem").get<std::string>();
  r.n = j.at("n").get<Index>();
  r.epsilon = j.at("epsilon").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.L = j.at("L").get<std::string>();
  r.max_outer_k = j.at("max_outer_k").get<Index>();
  r.inner_tol = j.at("inner_tol").get<double>();
  r.run.method = method_from_string(j.at("method").get<std::string>());
  std::vector<double> errs;
  std::vector<Index> ks;
  for (const auto& row : j.at("rows")) {
    IterationRow out;
    out.k = row.at("k").get<Index>();
    out.rel_error = detail::real_or_nan(row.at("rel_error"));
    out.inner_iterations = row.at("inner_iterations").get<Index>();
    out.inner_backward_error = row.at("inner_backward_error").get<double>();
    out.inner_capped = row.at("inner_capped").get<bool>();
    out.wall_ms = row.at("wall_ms").get<double>();
    r.run.rows.push_back(out);
    errs.push_back(out.rel_error);
    ks.push_back(out.k);
  }
  if (j.at("best_k").get<Index>() > 0) r.run.curve = analyze_curve(std::move(errs), std::move(ks));
  r.run.total_wall_ms = j.at("total_wall_ms").get<double>();
  if (!j.at("truncation").is_null()) r.run.truncation = j.at("truncation").get<std::string>();
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  return r;
}

inline nlohmann::json to_json(const std::vector<ExperimentRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr;
}

inline std::vector<ExperimentRecord> records_from_json(const nlohmann::json& j) {
  std::vector<ExperimentRecord> out;
  for (const auto& item : j) out.push_back(record_from_json(item));
  return out;
}

inline void emit_json(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << to_json(records).dump(2) << '\n';
}

inline void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  auto out = detail::open_for_write(path);
  emit_csv(records, out);
  detail::finish_write(out, path);
}

inline void emit_summary_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  auto out = detail::open_for_write(path);
  emit_summary_csv(records, out);
  detail::finish_write(out, path);
}

inline void emit_json(const std::vector<ExperimentRecord>& records, const std::string& path) {
  auto out = detail::open_for_write(path);
  emit_json(records, out);
  detail::finish_write(out, path);
}

inline std::vector<ExperimentRecord> load_records_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return records_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad record JSON in '" + path + "': " + e.what());
  }
}

}  // namespace hybreg
