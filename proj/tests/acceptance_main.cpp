// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "dish/analysis.hpp"
#include "dish/harness.hpp"
#include "dish/reference.hpp"
#include "dish/rng.hpp"
#include "dish/verify.hpp"

using namespace dish;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

Vector random_vector(Rng& rng, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = rng.normal();
  return v;
}

ProblemInstance ring_toy() {
  Graph g = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  Rng rng(42);
  std::vector<Vector> centers;
  for (int i = 0; i < 5; ++i) centers.push_back(random_vector(rng, 2));
  return make_quadratic_toy(centers, ConsensusMatrix::degree_weights(g, 2));
}

ProblemInstance scaled_setup1() {
  return make_least_squares(6, 0.7, 3, 20, 1.0, Vector::Ones(3), 7);
}

std::vector<UpdateSchedule> criterion_schedules(int n) {
  return {UpdateSchedule::constant(n, kGradientUpdate),
          UpdateSchedule::constant(n, kNewtonUpdate),
          UpdateSchedule::dish_k(n, 2),
          UpdateSchedule::switching_uniform(n, 5, 50, 123)};
}

struct CriterionResult {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

struct ContractionOutcome {
  double min_contraction = std::numeric_limits<double>::infinity();
  double min_prop1 = std::numeric_limits<double>::infinity();
  double min_prop2 = std::numeric_limits<double>::infinity();
  double max_envelope_violation = -std::numeric_limits<double>::infinity();
  bool all_reached = true;
  long slowest = 0;
  double phase_a_seconds = 0.0;
  int runs = 0;
};

// Criteria 1, 2, and 8 share the same run grid: first a 300-iteration pass
// with full merit/proposition diagnostics, then a continuation to the 1e-6
// relative-error target with the envelope tracked at every iteration.
ContractionOutcome run_contraction_grid() {
  ContractionOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ProblemInstance> instances;
  instances.push_back(ring_toy());
  instances.push_back(scaled_setup1());

  struct Phase {
    const ProblemInstance* inst;
    UpdateSchedule schedule;
    ConstantCatalog catalog;
    StepsizeBounds bounds;
  };
  std::vector<Phase> phases;
  for (const auto& inst : instances)
    for (double mu : {0.0, 1.0})
      for (const auto& sched : criterion_schedules(inst.n())) {
        ConstantCatalog cat = build_catalog(inst, mu, sched);
        StepsizeBounds bounds = theoretical_stepsizes(cat);
        phases.push_back(Phase{&inst, sched, std::move(cat), bounds});
      }

  // phase A: 300 iterations with merit + proposition diagnostics
  for (const auto& phase : phases) {
    DiagnosticsOptions dopts;
    dopts.rho = phase.bounds.rho;
    dopts.merit_max_k = 300;
    DiagnosticsRecorder recorder(*phase.inst, phase.schedule,
                                 phase.bounds.steps, phase.catalog, dopts);
    RunOptions opts;
    opts.max_iters = 300;
    opts.target_rel_err = 1e-15;
    opts.trace_stride = 0;
    opts.diagnostics = &recorder;
    run(*phase.inst, phase.schedule, phase.bounds.steps, opts);
    out.min_contraction =
        std::min(out.min_contraction, recorder.min_contraction_slack());
    out.min_prop1 = std::min(out.min_prop1, recorder.min_prop1_slack());
    out.min_prop2 = std::min(out.min_prop2, recorder.min_prop2_slack());
    ++out.runs;
  }
  out.phase_a_seconds = seconds_since(t0);

  // phase B: full runs to the 1e-6 target with the envelope at every k
  for (const auto& phase : phases) {
    DiagnosticsOptions dopts;
    dopts.rho = phase.bounds.rho;
    dopts.merit_max_k = 0;  // merit only at k = 0 (for the envelope constant)
    dopts.propositions = false;
    DiagnosticsRecorder recorder(*phase.inst, phase.schedule,
                                 phase.bounds.steps, phase.catalog, dopts);
    RunOptions opts;
    opts.max_iters = 10000000;
    opts.target_rel_err = 1e-6;
    opts.trace_stride = 0;
    opts.diagnostics = &recorder;
    const Trace trace = run(*phase.inst, phase.schedule, phase.bounds.steps, opts);
    out.all_reached = out.all_reached && trace.reached_target();
    out.slowest = std::max(out.slowest, trace.total_iterations);
    out.max_envelope_violation = std::max(out.max_envelope_violation,
                                          recorder.max_envelope_violation());
  }
  return out;
}

CriterionResult criterion1(const ContractionOutcome& grid) {
  std::ostringstream d;
  d << "min slack " << grid.min_contraction << " over " << grid.runs
    << " runs x 300 iters, " << grid.phase_a_seconds << " s";
  const bool pass =
      grid.min_contraction >= -1e-9 && grid.phase_a_seconds < 60.0;
  return {1, "merit contraction at the stated rate", pass, d.str()};
}

CriterionResult criterion2(const ContractionOutcome& grid) {
  std::ostringstream d;
  d << (grid.all_reached ? "all runs reached 1e-6" : "some run missed 1e-6")
    << ", slowest " << grid.slowest << " iters, max envelope violation "
    << grid.max_envelope_violation;
  const bool pass = grid.all_reached && grid.max_envelope_violation <= 1e-9;
  return {2, "exact convergence under the squared-error envelope", pass,
          d.str()};
}

CriterionResult criterion3() {
  Rng rng(33);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 3 + static_cast<int>(rng.uniform_int(0, 5));
    const int d = 1 + static_cast<int>(rng.uniform_int(0, 2));
    ProblemInstance inst = [&]() {
      switch (rep % 3) {
        case 0: {
          std::vector<Vector> centers;
          for (int i = 0; i < n; ++i) centers.push_back(random_vector(rng, d));
          const Graph g =
              erdos_renyi(n, 0.7, static_cast<std::uint64_t>(900 + rep));
          return make_quadratic_toy(centers,
                                    ConsensusMatrix::degree_weights(g, d));
        }
        case 1:
          return make_least_squares(n, 0.7, d, 8, 1.0, Vector::Ones(d),
                                    static_cast<std::uint64_t>(1000 + rep));
        default:
          return make_logistic(n, 0.7, d, 8, 1.0, Vector::Ones(d),
                               static_cast<std::uint64_t>(1100 + rep));
      }
    }();
    std::vector<UpdateKind> kinds;
    for (int i = 0; i < n; ++i)
      kinds.push_back(UpdateKind{static_cast<PrimalKind>(rng.uniform_int(0, 2)),
                                 static_cast<DualKind>(rng.uniform_int(0, 1))});
    UpdateSchedule sched = rep % 4 == 3
                               ? UpdateSchedule::switching_uniform(
                                     n, 5, 50, static_cast<std::uint64_t>(rep))
                               : UpdateSchedule::per_agent(kinds);
    const double mu = rep % 3 == 0 ? 0.0 : (rep % 3 == 1 ? 0.5 : 1.0);
    Stepsizes steps =
        theoretical_stepsizes(build_catalog(inst, mu, sched)).steps;
    if (rep % 2 == 0) steps.unit_newton_primal = true;
    worst = std::max(worst, max_engine_deviation(inst, sched, steps, 100));
  }
  std::ostringstream d;
  d << "max per-coordinate deviation " << worst
    << " over 20 configurations x 100 iters";
  return {3, "compact vs distributed engine equivalence", worst <= 1e-12,
          d.str()};
}

CriterionResult criterion4() {
  double worst_ah = 0.0, worst_esom = 0.0;
  std::vector<ProblemInstance> instances;
  instances.push_back(ring_toy());
  instances.push_back(scaled_setup1());
  for (const auto& inst : instances) {
    const int n = inst.n();
    const Eigen::Index nd = static_cast<Eigen::Index>(n) * inst.d();
    Rng rng(5);
    const Vector x0 = random_vector(rng, nd);
    const Vector l0 = random_vector(rng, nd);
    for (double mu : {0.0, 1.0}) {
      {
        const UpdateSchedule sched = UpdateSchedule::constant(n, kGradientUpdate);
        const Stepsizes steps =
            theoretical_stepsizes(build_catalog(inst, mu, sched)).steps;
        const auto ref =
            reference::arrow_hurwicz(inst, steps.a, steps.b, mu, x0, l0, 50);
        RunState s{x0, l0, 0};
        for (const auto& r : ref) {
          s = step_compact(s, inst, sched, steps);
          worst_ah = std::max(worst_ah, (s.x - r.x).cwiseAbs().maxCoeff());
          worst_ah =
              std::max(worst_ah, (s.lambda - r.lambda).cwiseAbs().maxCoeff());
        }
      }
      {
        const UpdateSchedule sched = UpdateSchedule::constant(n, kEsomUpdate);
        const Stepsizes steps =
            theoretical_stepsizes(build_catalog(inst, mu, sched)).steps;
        const auto ref =
            reference::esom0(inst, steps.a, steps.b, mu, x0, l0, 50);
        RunState s{x0, l0, 0};
        for (const auto& r : ref) {
          s = step_compact(s, inst, sched, steps);
          worst_esom = std::max(worst_esom, (s.x - r.x).cwiseAbs().maxCoeff());
          worst_esom =
              std::max(worst_esom, (s.lambda - r.lambda).cwiseAbs().maxCoeff());
        }
      }
    }
  }
  std::ostringstream d;
  d << "Arrow-Hurwicz dev " << worst_ah << ", ESOM-0 dev " << worst_esom
    << " over 50 iters";
  return {4, "special-case equivalences", worst_ah <= 1e-12 && worst_esom <= 1e-12,
          d.str()};
}

CriterionResult criterion5() {
  Rng rng(55);
  double worst_fd = 0.0;
  {
    const ProblemInstance inst = scaled_setup1();
    const Eigen::Index nd = 18;
    for (int rep = 0; rep < 10; ++rep) {
      const double mu = rep % 2 == 0 ? 0.0 : 1.0;
      const Vector lambda = random_vector(rng, nd);
      const DualEval eval = dual_value_grad(inst, mu, lambda);
      const Vector fd = fd_gradient(
          [&](const Vector& l) { return dual_value_grad(inst, mu, l).g; },
          lambda, 1e-5);
      worst_fd = std::max(
          worst_fd, (eval.grad - fd).norm() / std::max(1.0, eval.grad.norm()));
    }
  }
  double worst_identity = 0.0;
  {
    // nd = 60 logistic instance and the nd = 10 toy
    std::vector<ProblemInstance> instances;
    Vector scaling(3);
    scaling << 10.0, 0.1, 0.1;
    instances.push_back(make_logistic(20, 0.5, 3, 50, 1.0, scaling, 2));
    instances.push_back(ring_toy());
    for (const auto& inst : instances) {
      const Eigen::Index nd =
          static_cast<Eigen::Index>(inst.n()) * inst.d();
      for (double mu : {0.0, 1.0}) {
        for (int rep = 0; rep < 5; ++rep) {
          const Vector x = random_vector(rng, nd);
          const Vector lambda = random_vector(rng, nd);
          const DualNewtonStep step = dual_newton_step_exact(inst, mu, x, lambda);
          worst_identity = std::max(worst_identity, step.identity_residual);
        }
      }
    }
  }
  std::ostringstream d;
  d << "dual gradient fd dev " << worst_fd << ", dual Newton identity residual "
    << worst_identity;
  return {5, "dual-calculus correctness", worst_fd <= 1e-5 && worst_identity <= 1e-8,
          d.str()};
}

CriterionResult criterion6() {
  Rng rng(66);
  std::vector<ProblemInstance> instances;
  instances.push_back(ring_toy());
  instances.push_back(scaled_setup1());
  bool sector_ok = true, lipschitz_ok = true;
  int pl_stated_failures = 0, pl_squared_failures = 0, pl_points = 0;
  for (const auto& inst : instances) {
    const Eigen::Index nd = static_cast<Eigen::Index>(inst.n()) * inst.d();
    InnerSolver solver(inst, 0.0);
    for (double mu : {0.0, 1.0}) {
      // sector bounds on the inner Hessian at 10 random points
      for (int rep = 0; rep < 10; ++rep) {
        const Vector x = random_vector(rng, nd);
        Matrix h = Matrix::Zero(nd, nd);
        Matrix hi(inst.d(), inst.d());
        for (int i = 0; i < inst.n(); ++i) {
          inst.objectives[static_cast<std::size_t>(i)]->hessian_into(
              x.segment(static_cast<Eigen::Index>(i) * inst.d(), inst.d()), hi);
          h.block(static_cast<Eigen::Index>(i) * inst.d(),
                  static_cast<Eigen::Index>(i) * inst.d(), inst.d(), inst.d()) = hi;
        }
        h.noalias() += mu * solver.dense_W();
        Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
        sector_ok = sector_ok && es.eigenvalues().minCoeff() >= inst.s - 1e-9 &&
                    es.eigenvalues().maxCoeff() <= inst.l + 2.0 * mu + 1e-9;
      }
      // PL inequality at 10 random multipliers with the stated constant
      const double g_opt = optimal_dual_value(inst);
      const double gap = inst.topology.spectral_gap();
      const double p_stated = gap / (inst.l + 2.0 * mu);
      const double p_squared = gap * gap / (inst.l + 2.0 * mu);
      for (int rep = 0; rep < 10; ++rep) {
        const Vector lambda = random_vector(rng, nd);
        const DualEval eval = dual_value_grad(inst, mu, lambda);
        const double lhs = g_opt - eval.g;
        const double g2 = eval.grad.squaredNorm();
        ++pl_points;
        if (lhs > g2 / (2.0 * p_stated) + 1e-9) ++pl_stated_failures;
        if (lhs > g2 / (2.0 * p_squared) + 1e-9) ++pl_squared_failures;
      }
      // dual Lipschitz constant 4/s at 20 random pairs
      for (int rep = 0; rep < 20; ++rep) {
        const Vector l1 = random_vector(rng, nd);
        const Vector l2 = random_vector(rng, nd);
        const Vector g1 = dual_value_grad(inst, mu, l1).grad;
        const Vector g2v = dual_value_grad(inst, mu, l2).grad;
        lipschitz_ok = lipschitz_ok &&
                       (g1 - g2v).norm() <=
                           (4.0 / inst.s) * (l1 - l2).norm() + 1e-9;
      }
    }
  }
  std::ostringstream d;
  d << "sector " << (sector_ok ? "ok" : "VIOLATED") << "; PL(stated constant) "
    << pl_stated_failures << "/" << pl_points
    << " violations; PL(squared gap) " << pl_squared_failures << "/"
    << pl_points << " violations; Lipschitz "
    << (lipschitz_ok ? "ok" : "VIOLATED")
    << " -- the stated constant overstates the spectral factor off complete "
       "graphs";
  const bool pass = sector_ok && lipschitz_ok && pl_stated_failures == 0;
  return {6, "curvature and dual-function bound suite", pass, d.str()};
}

CriterionResult criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream d;
  bool linear_ok = true, newton_ok = true, monotone_any = false;
  for (const ExperimentConfig& config : {setup1_config(), setup2_config()}) {
    const SuiteResult suite = run_suite(config, "");
    long dish_g = -1, dish_half = -1, dish_n = -1;
    for (std::size_t i = 0; i < suite.rows.size(); ++i) {
      const SummaryRow& row = suite.rows[i];
      if (!row.error.empty() || !row.reached) {
        linear_ok = false;
        d << row.method << " failed; ";
        continue;
      }
      const RateFit fit = fit_rate(suite.traces[i]);
      if (fit.r_squared < 0.95) {
        linear_ok = false;
        d << row.method << " R2=" << fit.r_squared << "; ";
      }
      if (row.method == "DISH-G") dish_g = row.iterations;
      if (row.method == "DISH-5" || row.method == "DISH-10")
        dish_half = row.iterations;
      if (row.method == "DISH-N") dish_n = row.iterations;
    }
    if (dish_g < 0 || dish_half < 0 || dish_n < 0) {
      newton_ok = false;
      continue;
    }
    d << "[iters G/half/N " << dish_g << "/" << dish_half << "/" << dish_n
      << "] ";
    newton_ok = newton_ok && dish_n <= dish_g;
    monotone_any =
        monotone_any || (dish_half <= dish_g && dish_n <= dish_half);
  }
  const double secs = seconds_since(t0);
  d << "runtime " << secs << " s";
  const bool pass = linear_ok && newton_ok && monotone_any && secs < 600.0;
  return {7, "qualitative study reproduction", pass, d.str()};
}

CriterionResult criterion8(const ContractionOutcome& grid) {
  std::ostringstream d;
  d << "min prop1 slack " << grid.min_prop1 << ", min prop2 slack "
    << grid.min_prop2;
  const bool pass = grid.min_prop1 >= -1e-7 && grid.min_prop2 >= -1e-7;
  return {8, "proposition diagnostics", pass, d.str()};
}

}  // namespace

int main() {
  std::vector<CriterionResult> results;
  const ContractionOutcome grid = run_contraction_grid();
  results.push_back(criterion1(grid));
  results.push_back(criterion2(grid));
  results.push_back(criterion3());
  results.push_back(criterion4());
  results.push_back(criterion5());
  results.push_back(criterion6());
  results.push_back(criterion7());
  results.push_back(criterion8(grid));

  int failures = 0;
  for (const auto& r : results) {
    std::printf("[%s] criterion %d: %s -- %s\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.detail.c_str());
    if (!r.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failures,
              results.size());
  return failures;
}
