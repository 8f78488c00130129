#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dish/engine.hpp"
#include "dish/objectives.hpp"
#include "dish/schedule.hpp"
#include "dish/types.hpp"

namespace dish {

/// Configuration errors get their own type so the CLI can map them to a
/// distinct exit code.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Power-of-`factor` grid on [lo, hi] used for stepsize tuning.
struct TuningGrid {
  double lo = 1.0 / 64.0;  // 2^-6
  double hi = 16.0;        // 2^4
  double factor = 2.0;
  double target_rel_err = 1e-8;
  long max_iters = 5000;
  bool parallel = true;

  std::vector<double> values() const;
};

struct TuneResult {
  Stepsizes steps;
  double a = 0.0;
  double b = 0.0;
  double mu = 0.0;
  long iterations = -1;
  bool reached = false;  // false: best-final-error fallback ("untargeted")
  double final_rel_err = 0.0;
};

/// Exhaustive search over uniform-across-agents (a, b, mu); mu runs on the
/// grid joined with {0}, and a_i is fixed to 1 on Newton-type primal steps.
/// Minimizes iterations-to-target; ties break to smaller final error, then
/// smaller a, b, mu. Grid points are independent runs and execute under
/// OpenMP; the selection is restored to grid order and is deterministic.
TuneResult tune(const ProblemInstance& instance, const UpdateSchedule& schedule,
                const TuningGrid& grid);

/// EXTRA has a single stepsize alpha; tuned on the same grid.
TuneResult tune_extra(const ProblemInstance& instance, const TuningGrid& grid);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  long points = 0;
};

/// Least-squares slope of log(rel_err) against k over the linear regime:
/// the first 10% of iterations are discarded and only rows with rel_err in
/// (1e-12, 1) enter the fit.
RateFit fit_rate(const Trace& trace);

struct MethodSpec {
  std::string name;
  bool is_extra = false;
  UpdateSchedule schedule;
  nlohmann::json raw;
};

struct ExperimentConfig {
  enum class Setup { LeastSquares, Logistic, QuadraticToy, Custom };
  Setup setup = Setup::QuadraticToy;

  int n = 0;
  double p = 1.0;
  std::uint64_t graph_seed = 1;

  int d = 1;
  int n_i = 1;
  double rho = 0.0;
  double noise_std = 1.0;
  Vector scaling;
  std::uint64_t problem_seed = 1;
  std::vector<Vector> centers;  // quadratic toy (empty: seeded normals)
  std::string instance_path;    // custom setup

  std::vector<MethodSpec> methods;
  TuningGrid tuning;
  Vector x0, lambda0;  // empty: zeros
  std::string output = "out";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
};

/// Parses one schedule spec ({"kind":"constant"|"dish_k"|"switching", ...}).
UpdateSchedule schedule_from_json(const nlohmann::json& j, int n_agents);

ProblemInstance build_instance(const ExperimentConfig& config);

/// Reconstructs an instance from the dump format written by dump_instance.
ProblemInstance load_instance(const nlohmann::json& j);

struct SummaryRow {
  std::string method;
  double a = 0.0, b = 0.0, mu = 0.0;
  long iterations = -1;
  bool reached = false;
  double final_rel_err = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  bool diverged = false;
  std::string error;
};

struct SuiteResult {
  std::vector<SummaryRow> rows;
  std::vector<Trace> traces;
  int exit_code = 0;  // 2 when any method diverged or failed
};

/// Tunes and runs every configured method; per-method failures are isolated.
/// Writes instance.json, graph.txt, consensus.csv, per-method trace CSVs,
/// summary.json, and plotdata/<method>.dat files of (k, log10 rel_err)
/// pairs under `output_dir` (empty: no files written).
SuiteResult run_suite(const ExperimentConfig& config,
                      const std::string& output_dir);

nlohmann::json summary_to_json(const std::vector<SummaryRow>& rows);

/// Canned experiment configurations for the two synthetic studies.
ExperimentConfig setup1_config();
ExperimentConfig setup2_config();

}  // namespace dish
