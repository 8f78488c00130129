#include "dish/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dish/reference.hpp"
#include "dish/rng.hpp"

namespace dish {

namespace {

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(j.size());
  Eigen::Index i = 0;
  for (const auto& x : j) v(i++) = x.get<double>();
  return v;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                    .get<double>();
  return m;
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
            c == '_' || c == '.')
               ? c
               : '_';
  return out;
}

struct Candidate {
  double a, b, mu;
};

struct CandidateRecord {
  bool reached = false;
  bool diverged = false;
  long iterations = -1;
  double final_rel_err = std::numeric_limits<double>::infinity();
};

void atomic_min(std::atomic<long>& target, long value) {
  long cur = target.load(std::memory_order_relaxed);
  while (value < cur &&
         !target.compare_exchange_weak(cur, value, std::memory_order_relaxed))
    ;
}

}  // namespace

std::vector<double> TuningGrid::values() const {
  if (!(lo > 0.0) || hi < lo || !(factor > 1.0))
    throw ConfigError("config: bad tuning grid");
  std::vector<double> v;
  for (double x = lo; x <= hi * (1.0 + 1e-12); x *= factor) v.push_back(x);
  return v;
}

namespace {

// Shared exhaustive-search core: runs every candidate (each an independent
// run, executed under OpenMP) and selects the winner in grid order. Once
// some candidate reaches the target in m iterations, later runs are capped
// at m iterations; censored runs can no longer win any tie-break, so the
// selection is independent of thread scheduling.
TuneResult tune_over(const std::vector<Candidate>& candidates,
                     const TuningGrid& grid,
                     const std::function<Trace(const Candidate&, long)>& probe,
                     const std::function<Stepsizes(const Candidate&)>& realize) {
  const long total = static_cast<long>(candidates.size());
  if (total == 0) throw ConfigError("config: empty tuning grid");
  std::vector<CandidateRecord> records(candidates.size());
  std::atomic<long> bound{grid.max_iters};

#pragma omp parallel for schedule(dynamic) if (grid.parallel)
  for (long idx = 0; idx < total; ++idx) {
    const long cap = bound.load(std::memory_order_relaxed);
    Trace trace = probe(candidates[static_cast<std::size_t>(idx)], cap);
    auto& rec = records[static_cast<std::size_t>(idx)];
    rec.diverged = trace.diverged;
    rec.reached = trace.reached_target();
    rec.iterations = trace.iterations_to_target;
    rec.final_rel_err =
        trace.diverged ? std::numeric_limits<double>::infinity()
                       : trace.final_rel_err;
    if (rec.reached) atomic_min(bound, rec.iterations);
  }

  long best = -1;
  bool best_reached = false;
  for (long idx = 0; idx < total; ++idx) {
    const auto& rec = records[static_cast<std::size_t>(idx)];
    if (rec.diverged) continue;
    if (best < 0) {
      best = idx;
      best_reached = rec.reached;
      continue;
    }
    const auto& cur = records[static_cast<std::size_t>(best)];
    if (rec.reached != best_reached) {
      if (rec.reached) {
        best = idx;
        best_reached = true;
      }
      continue;
    }
    if (rec.reached) {
      if (rec.iterations < cur.iterations ||
          (rec.iterations == cur.iterations &&
           rec.final_rel_err < cur.final_rel_err))
        best = idx;
      // equal iterations and error: keep the earlier grid point (smaller a,
      // then b, then mu by construction order)
    } else if (rec.final_rel_err < cur.final_rel_err) {
      best = idx;
    }
  }
  if (best < 0) throw Error("tuning failed: every grid point diverged");

  const auto& rec = records[static_cast<std::size_t>(best)];
  const Candidate& c = candidates[static_cast<std::size_t>(best)];
  TuneResult result;
  result.steps = realize(c);
  result.a = c.a;
  result.b = c.b;
  result.mu = c.mu;
  result.iterations = rec.reached ? rec.iterations : grid.max_iters;
  result.reached = rec.reached;
  result.final_rel_err = rec.final_rel_err;
  return result;
}

}  // namespace

TuneResult tune(const ProblemInstance& instance, const UpdateSchedule& schedule,
                const TuningGrid& grid) {
  const std::vector<double> g = grid.values();
  std::vector<double> a_values =
      schedule.any_gradient_primal() ? g : std::vector<double>{1.0};
  std::vector<double> mu_values{0.0};
  mu_values.insert(mu_values.end(), g.begin(), g.end());

  // ascending a, then b, then mu; the tie-break prefers earlier points
  std::vector<Candidate> candidates;
  for (double mu : mu_values)
    for (double a : a_values)
      for (double b : g) candidates.push_back(Candidate{a, b, mu});
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) {
              if (x.a != y.a) return x.a < y.a;
              if (x.b != y.b) return x.b < y.b;
              return x.mu < y.mu;
            });

  const int n = instance.n();
  auto realize = [&](const Candidate& c) {
    Stepsizes s = Stepsizes::uniform(n, c.a, c.b, c.mu);
    s.unit_newton_primal = true;
    return s;
  };
  auto probe = [&](const Candidate& c, long cap) {
    RunOptions opts;
    opts.max_iters = std::min(grid.max_iters, cap);
    opts.target_rel_err = grid.target_rel_err;
    opts.trace_stride = 0;
    return run(instance, schedule, realize(c), opts);
  };
  return tune_over(candidates, grid, probe, realize);
}

TuneResult tune_extra(const ProblemInstance& instance, const TuningGrid& grid) {
  std::vector<Candidate> candidates;
  for (double a : grid.values()) candidates.push_back(Candidate{a, a, 0.0});
  auto realize = [&](const Candidate& c) {
    return Stepsizes::uniform(instance.n(), c.a, c.a, 0.0);
  };
  auto probe = [&](const Candidate& c, long cap) {
    RunOptions opts;
    opts.max_iters = std::min(grid.max_iters, cap);
    opts.target_rel_err = grid.target_rel_err;
    opts.trace_stride = 0;
    return run_extra(instance, c.a, opts);
  };
  TuneResult result = tune_over(candidates, grid, probe, realize);
  result.b = 0.0;
  return result;
}

RateFit fit_rate(const Trace& trace) {
  if (trace.rows.empty()) throw Error("insufficient points");
  const long last_k = trace.rows.back().k;
  const double k_min = 0.1 * static_cast<double>(last_k);
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : trace.rows) {
    if (static_cast<double>(row.k) < k_min) continue;
    if (!(row.rel_err > 1e-12) || !(row.rel_err < 1.0)) continue;
    pts.emplace_back(static_cast<double>(row.k), std::log(row.rel_err));
  }
  if (pts.size() < 10) throw Error("insufficient points");

  const double m = static_cast<double>(pts.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  RateFit fit;
  fit.points = static_cast<long>(pts.size());
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  // constant input (variance at the rounding floor) is fit exactly
  const double var_floor = 1e-12 * (1.0 + std::abs(my));
  if (syy > m * var_floor * var_floor) {
    double ss_res = 0.0;
    for (const auto& [x, y] : pts) {
      const double r = y - (fit.intercept + fit.slope * x);
      ss_res += r * r;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  } else {
    fit.slope = 0.0;
    fit.r_squared = 1.0;
  }
  return fit;
}

UpdateSchedule schedule_from_json(const nlohmann::json& j, int n_agents) {
  const std::string kind = j.value("kind", "");
  if (kind == "constant") {
    const std::string primal = j.value("primal", "gradient");
    const std::string dual = j.value("dual", "gradient");
    UpdateKind k;
    if (primal == "gradient")
      k.primal = PrimalKind::Gradient;
    else if (primal == "newton")
      k.primal = PrimalKind::Newton;
    else if (primal == "esom")
      k.primal = PrimalKind::Esom;
    else
      throw ConfigError("config: unknown primal kind '" + primal + "'");
    if (dual == "gradient")
      k.dual = DualKind::Gradient;
    else if (dual == "newton")
      k.dual = DualKind::Newton;
    else
      throw ConfigError("config: unknown dual kind '" + dual + "'");
    return UpdateSchedule::constant(n_agents, k);
  }
  if (kind == "dish_k")
    return UpdateSchedule::dish_k(n_agents, j.value("K", 0));
  if (kind == "switching") {
    const std::string dist = j.value("dist", "uniform");
    const std::uint64_t seed = j.value("seed", std::uint64_t{1});
    if (dist == "uniform")
      return UpdateSchedule::switching_uniform(n_agents, j.value("lo", 5),
                                               j.value("hi", 50), seed);
    if (dist == "lognormal")
      return UpdateSchedule::switching_lognormal(
          n_agents, j.value("mean", 2.0), j.value("var", 4.0),
          j.value("shift", 30.0), seed, j.value("var_is_stddev", false));
    throw ConfigError("config: unknown switching dist '" + dist + "'");
  }
  throw ConfigError("config: unknown schedule kind '" + kind + "'");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  const std::string setup = j.value("setup", "");
  if (setup == "least_squares")
    c.setup = Setup::LeastSquares;
  else if (setup == "logistic")
    c.setup = Setup::Logistic;
  else if (setup == "quadratic_toy")
    c.setup = Setup::QuadraticToy;
  else if (setup == "custom")
    c.setup = Setup::Custom;
  else
    throw ConfigError("config: unknown setup '" + setup + "'");

  if (j.contains("graph")) {
    const auto& g = j.at("graph");
    c.n = g.value("n", 0);
    c.p = g.value("p", 1.0);
    c.graph_seed = g.value("seed", std::uint64_t{1});
  }
  if (j.contains("problem")) {
    const auto& p = j.at("problem");
    c.d = p.value("d", 1);
    c.n_i = p.value("N_i", 1);
    c.rho = p.value("rho", 0.0);
    c.noise_std = p.value("noise_std", 1.0);
    c.problem_seed = p.value("seed", std::uint64_t{1});
    if (p.contains("scaling")) c.scaling = vector_from_json(p.at("scaling"));
    if (p.contains("centers"))
      for (const auto& ctr : p.at("centers"))
        c.centers.push_back(vector_from_json(ctr));
  }
  if (c.setup == Setup::Custom) {
    if (!j.contains("instance"))
      throw ConfigError("config: custom setup needs an 'instance' path");
    c.instance_path = j.at("instance").get<std::string>();
  }

  if (!j.contains("methods") || j.at("methods").empty())
    throw ConfigError("config: no methods");
  int agents = c.n;
  for (const auto& mj : j.at("methods")) {
    MethodSpec spec;
    spec.raw = mj;
    const std::string kind = mj.value("kind", "");
    spec.name = mj.value("name", kind);
    if (kind == "extra") {
      spec.is_extra = true;
    } else if (agents > 0) {
      try {
        spec.schedule = schedule_from_json(mj, agents);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError("config: method '" + spec.name + "': " + e.what());
      }
    }
    c.methods.push_back(std::move(spec));
  }

  if (j.contains("tuning")) {
    const auto& t = j.at("tuning");
    c.tuning.lo = t.value("grid_lo", c.tuning.lo);
    c.tuning.hi = t.value("grid_hi", c.tuning.hi);
    c.tuning.factor = t.value("grid_factor", c.tuning.factor);
    c.tuning.target_rel_err = t.value("target_rel_err", c.tuning.target_rel_err);
    c.tuning.max_iters = t.value("max_iters", c.tuning.max_iters);
    c.tuning.parallel = t.value("parallel", c.tuning.parallel);
  }
  if (c.tuning.lo > c.tuning.hi) throw ConfigError("config: grid_lo > grid_hi");
  if (!(c.tuning.target_rel_err > 0.0) || !(c.tuning.target_rel_err < 1.0))
    throw ConfigError("config: target_rel_err must lie in (0, 1)");

  if (j.contains("x0") && j.at("x0").is_array())
    c.x0 = vector_from_json(j.at("x0"));
  if (j.contains("lambda0") && j.at("lambda0").is_array())
    c.lambda0 = vector_from_json(j.at("lambda0"));
  c.output = j.value("output", c.output);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return from_json(j);
}

ProblemInstance load_instance(const nlohmann::json& j) {
  const std::string kind = j.value("kind", "");
  const int n = j.value("n", 0);
  const int d = j.value("d", 0);
  const auto& params = j.at("params");
  std::istringstream edge_stream(params.at("graph").get<std::string>());
  Graph g = Graph::read_edge_list(edge_stream);
  ConsensusMatrix cm = ConsensusMatrix::custom(
      g, matrix_from_json(params.at("consensus_matrix")), d);

  std::vector<std::shared_ptr<const LocalObjective>> objectives;
  if (kind == "quadratic_toy") {
    for (const auto& ctr : params.at("centers"))
      objectives.push_back(
          std::make_shared<QuadraticObjective>(vector_from_json(ctr)));
  } else if (kind == "least_squares" || kind == "logistic") {
    const double rho = params.value("rho", 0.0);
    double n_total = 0;
    for (const auto& agent : params.at("agents"))
      n_total += static_cast<double>(agent.at("y").size());
    for (const auto& agent : params.at("agents")) {
      Matrix A = matrix_from_json(agent.at("A"));
      Vector y = vector_from_json(agent.at("y"));
      if (kind == "least_squares")
        objectives.push_back(std::make_shared<LeastSquaresObjective>(
            std::move(A), std::move(y), n_total, rho / n));
      else
        objectives.push_back(std::make_shared<LogisticObjective>(
            std::move(A), std::move(y), n_total, rho / n));
    }
  } else {
    throw ConfigError("config: cannot rebuild instance of kind '" + kind + "'");
  }
  ProblemInstance inst = make_instance(std::move(objectives), std::move(cm));
  inst.meta = {{"kind", kind},
               {"seed", j.value("seed", std::uint64_t{0})},
               {"params", params}};
  return inst;
}

ProblemInstance build_instance(const ExperimentConfig& config) {
  switch (config.setup) {
    case ExperimentConfig::Setup::LeastSquares: {
      Vector scaling = config.scaling.size() > 0
                           ? config.scaling
                           : Vector::Ones(config.d).eval();
      return make_least_squares(config.n, config.p, config.d, config.n_i,
                                config.rho, scaling, config.problem_seed,
                                config.noise_std);
    }
    case ExperimentConfig::Setup::Logistic: {
      Vector scaling = config.scaling.size() > 0
                           ? config.scaling
                           : Vector::Ones(config.d).eval();
      return make_logistic(config.n, config.p, config.d, config.n_i,
                           config.rho, scaling, config.problem_seed,
                           config.noise_std);
    }
    case ExperimentConfig::Setup::QuadraticToy: {
      std::vector<Vector> centers = config.centers;
      if (centers.empty()) {
        Rng rng(splitmix64(config.problem_seed));
        for (int i = 0; i < config.n; ++i) {
          Vector c(config.d);
          for (int k = 0; k < config.d; ++k) c(k) = rng.normal();
          centers.push_back(std::move(c));
        }
      }
      Graph g = erdos_renyi(static_cast<int>(centers.size()), config.p,
                            config.graph_seed);
      return make_quadratic_toy(
          centers, ConsensusMatrix::degree_weights(g, static_cast<int>(
                                                          centers.front().size())));
    }
    case ExperimentConfig::Setup::Custom: {
      std::ifstream in(config.instance_path);
      if (!in)
        throw ConfigError("config: cannot open instance '" +
                          config.instance_path + "'");
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: instance parse error: ") +
                          e.what());
      }
      return load_instance(j);
    }
  }
  throw ConfigError("config: unknown setup");
}

nlohmann::json summary_to_json(const std::vector<SummaryRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"method", r.method},
                     {"a", r.a},
                     {"b", r.b},
                     {"mu", r.mu},
                     {"reached", r.reached},
                     {"final_rel_err", r.final_rel_err},
                     {"slope", r.slope},
                     {"r_squared", r.r_squared},
                     {"diverged", r.diverged}};
    if (r.reached)
      j["iterations"] = r.iterations;
    else
      j["iterations"] = "not reached";
    if (!r.error.empty()) j["error"] = r.error;
    out.push_back(std::move(j));
  }
  return out;
}

SuiteResult run_suite(const ExperimentConfig& config,
                      const std::string& output_dir) {
  namespace fs = std::filesystem;
  ProblemInstance instance = build_instance(config);
  const Eigen::Index nd =
      static_cast<Eigen::Index>(instance.n()) * instance.d();
  const Vector x0 =
      config.x0.size() > 0 ? config.x0 : Vector::Zero(nd).eval();
  const Vector lambda0 =
      config.lambda0.size() > 0 ? config.lambda0 : Vector::Zero(nd).eval();

  const bool writing = !output_dir.empty();
  if (writing) {
    fs::create_directories(fs::path(output_dir) / "plotdata");
    std::ofstream ij(fs::path(output_dir) / "instance.json");
    dump_instance(instance, ij);
    std::ofstream gf(fs::path(output_dir) / "graph.txt");
    instance.topology.graph().write_edge_list(gf);
    std::ofstream zf(fs::path(output_dir) / "consensus.csv");
    instance.topology.write_csv(zf);
  }

  SuiteResult result;
  for (const auto& method : config.methods) {
    SummaryRow row;
    row.method = method.name;
    Trace trace;
    try {
      UpdateSchedule schedule = method.schedule;
      if (!method.is_extra && schedule.agents() != instance.n())
        schedule = schedule_from_json(method.raw, instance.n());

      RunOptions opts;
      opts.max_iters = config.tuning.max_iters;
      opts.target_rel_err = config.tuning.target_rel_err;
      opts.trace_stride = 1;

      if (method.is_extra) {
        TuneResult tuned = tune_extra(instance, config.tuning);
        row.a = tuned.a;
        trace = run_extra(instance, tuned.a, x0, opts);
      } else {
        TuneResult tuned = tune(instance, schedule, config.tuning);
        row.a = tuned.a;
        row.b = tuned.b;
        row.mu = tuned.mu;
        trace = run(instance, schedule, tuned.steps, x0, lambda0, opts);
      }
      row.iterations = trace.iterations_to_target;
      row.reached = trace.reached_target();
      row.final_rel_err = trace.final_rel_err;
      row.diverged = trace.diverged;
      if (trace.diverged) {
        row.error = trace.message;
        result.exit_code = 2;
      }
      try {
        const RateFit fit = fit_rate(trace);
        row.slope = fit.slope;
        row.r_squared = fit.r_squared;
      } catch (const Error&) {
        // too few usable points; slope stays zero
      }
      if (writing) {
        const std::string safe = sanitize(method.name);
        std::ofstream tf(fs::path(output_dir) / ("trace_" + safe + ".csv"));
        trace.write_csv(tf);
        std::ofstream pf(fs::path(output_dir) / "plotdata" / (safe + ".dat"));
        char buf[64];
        for (const auto& r : trace.rows) {
          if (!(r.rel_err > 0.0)) continue;
          std::snprintf(buf, sizeof(buf), "%ld %.17g\n", r.k,
                        std::log10(r.rel_err));
          pf << buf;
        }
      }
    } catch (const Error& e) {
      row.error = e.what();
      row.diverged = true;
      result.exit_code = 2;
    }
    result.rows.push_back(row);
    result.traces.push_back(std::move(trace));
  }

  if (writing) {
    std::ofstream sf(fs::path(output_dir) / "summary.json");
    sf << summary_to_json(result.rows).dump(2) << "\n";
  }
  return result;
}

namespace {

nlohmann::json method_json(const char* name, nlohmann::json body) {
  body["name"] = name;
  return body;
}

ExperimentConfig setup_config_common(nlohmann::json j) {
  return ExperimentConfig::from_json(j);
}

}  // namespace

ExperimentConfig setup1_config() {
  nlohmann::json j{
      {"setup", "least_squares"},
      {"graph", {{"n", 10}, {"p", 0.7}, {"seed", 1}}},
      {"problem",
       {{"d", 5},
        {"N_i", 50},
        {"rho", 1.0},
        {"scaling", {10.0, 10.0, 0.1, 0.1, 0.1}},
        {"seed", 1}}},
      {"methods",
       {method_json("EXTRA", {{"kind", "extra"}}),
        method_json("ESOM-0", {{"kind", "constant"},
                               {"primal", "esom"},
                               {"dual", "gradient"}}),
        method_json("DISH-G", {{"kind", "constant"},
                               {"primal", "gradient"},
                               {"dual", "gradient"}}),
        method_json("DISH-5", {{"kind", "dish_k"}, {"K", 5}}),
        method_json("DISH-N", {{"kind", "constant"},
                               {"primal", "newton"},
                               {"dual", "newton"}}),
        method_json("DISH-GN-U", {{"kind", "switching"},
                                  {"dist", "uniform"},
                                  {"lo", 5},
                                  {"hi", 50},
                                  {"seed", 11}}),
        method_json("DISH-GN-LN", {{"kind", "switching"},
                                   {"dist", "lognormal"},
                                   {"mean", 2.0},
                                   {"var", 4.0},
                                   {"shift", 30.0},
                                   {"seed", 12}})}},
      {"tuning",
       {{"grid_lo", 0.015625},
        {"grid_hi", 16.0},
        {"grid_factor", 2.0},
        {"target_rel_err", 1e-8},
        {"max_iters", 50000}}},
      {"output", "results/setup1"}};
  return setup_config_common(std::move(j));
}

ExperimentConfig setup2_config() {
  nlohmann::json j{
      {"setup", "logistic"},
      {"graph", {{"n", 20}, {"p", 0.5}, {"seed", 2}}},
      {"problem",
       {{"d", 3},
        {"N_i", 50},
        {"rho", 1.0},
        {"scaling", {10.0, 0.1, 0.1}},
        {"seed", 2}}},
      {"methods",
       {method_json("EXTRA", {{"kind", "extra"}}),
        method_json("ESOM-0", {{"kind", "constant"},
                               {"primal", "esom"},
                               {"dual", "gradient"}}),
        method_json("DISH-G", {{"kind", "constant"},
                               {"primal", "gradient"},
                               {"dual", "gradient"}}),
        method_json("DISH-10", {{"kind", "dish_k"}, {"K", 10}}),
        method_json("DISH-N", {{"kind", "constant"},
                               {"primal", "newton"},
                               {"dual", "newton"}}),
        method_json("DISH-GN-U", {{"kind", "switching"},
                                  {"dist", "uniform"},
                                  {"lo", 5},
                                  {"hi", 50},
                                  {"seed", 11}}),
        method_json("DISH-GN-LN", {{"kind", "switching"},
                                   {"dist", "lognormal"},
                                   {"mean", 2.0},
                                   {"var", 4.0},
                                   {"shift", 30.0},
                                   {"seed", 12}})}},
      {"tuning",
       {{"grid_lo", 0.015625},
        {"grid_hi", 16.0},
        {"grid_factor", 2.0},
        {"target_rel_err", 1e-8},
        {"max_iters", 50000}}},
      {"output", "results/setup2"}};
  return setup_config_common(std::move(j));
}

}  // namespace dish
