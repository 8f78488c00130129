#include "dish/verify.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "dish/reference.hpp"
#include "dish/rng.hpp"

namespace dish {

namespace {

Matrix dense_kron_w(const ConsensusMatrix& cm) {
  const int n = cm.n(), d = cm.d();
  Matrix W = Matrix::Zero(static_cast<Eigen::Index>(n) * d,
                          static_cast<Eigen::Index>(n) * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double w = (i == j ? 1.0 : 0.0) - cm.Z()(i, j);
      for (int k = 0; k < d; ++k)
        W(static_cast<Eigen::Index>(i) * d + k,
          static_cast<Eigen::Index>(j) * d + k) = w;
    }
  return W;
}

Matrix dense_block_hessian(const ProblemInstance& inst, const Vector& x) {
  const int n = inst.n(), d = inst.d();
  Matrix H = Matrix::Zero(static_cast<Eigen::Index>(n) * d,
                          static_cast<Eigen::Index>(n) * d);
  Matrix hi(d, d);
  for (int i = 0; i < n; ++i) {
    inst.objectives[static_cast<std::size_t>(i)]->hessian_into(
        x.segment(static_cast<Eigen::Index>(i) * d, d), hi);
    H.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(i) * d,
            d, d) = hi;
  }
  return H;
}

Vector random_vector(Rng& rng, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = rng.normal();
  return v;
}

ProblemInstance ring_toy() {
  std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}};
  Graph g = Graph::from_edges(5, edges);
  Rng rng(42);
  std::vector<Vector> centers;
  for (int i = 0; i < 5; ++i) centers.push_back(random_vector(rng, 2));
  return make_quadratic_toy(centers, ConsensusMatrix::degree_weights(g, 2));
}

ProblemInstance small_least_squares() {
  return make_least_squares(4, 0.8, 2, 10, 1.0, Vector::Ones(2), 3);
}

ProblemInstance small_logistic() {
  return make_logistic(4, 0.8, 2, 10, 1.0, Vector::Ones(2), 4);
}

struct Fail {
  bool failed = false;
  std::ostringstream detail;
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      failed = true;
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
    }
  }
};

CheckResult finish(const std::string& name, Fail& f, const std::string& ok) {
  return CheckResult{name, !f.failed, f.failed ? f.detail.str() : ok};
}

}  // namespace

double max_engine_deviation(const ProblemInstance& instance,
                            const UpdateSchedule& schedule,
                            const Stepsizes& steps, int iterations) {
  const int n = instance.n(), d = instance.d();
  Rng rng(7);
  RunState compact{random_vector(rng, static_cast<Eigen::Index>(n) * d),
                   random_vector(rng, static_cast<Eigen::Index>(n) * d), 0};
  std::vector<AgentState> states = split_state(compact, n, d);
  double dev = 0.0;
  for (int k = 0; k < iterations; ++k) {
    RunState next = step_compact(compact, instance, schedule, steps);
    Mailbox mailbox = exchange_messages(states, instance.topology.graph());
    states =
        step_distributed(states, mailbox, instance, schedule, steps, k);
    const RunState stacked = stack_states(states, k + 1);
    dev = std::max(dev, (next.x - stacked.x).cwiseAbs().maxCoeff());
    dev = std::max(dev, (next.lambda - stacked.lambda).cwiseAbs().maxCoeff());
    compact = std::move(next);
  }
  return dev;
}

double max_serial_omp_deviation(const ProblemInstance& instance,
                                const UpdateSchedule& schedule,
                                const Stepsizes& steps, int iterations) {
  const int n = instance.n(), d = instance.d();
  Rng rng(11);
  RunState serial{random_vector(rng, static_cast<Eigen::Index>(n) * d),
                  random_vector(rng, static_cast<Eigen::Index>(n) * d), 0};
  RunState parallel = serial;
  double dev = 0.0;
  for (int k = 0; k < iterations; ++k) {
    serial = step_compact(serial, instance, schedule, steps, Execution::Serial);
    parallel =
        step_compact(parallel, instance, schedule, steps, Execution::OpenMP);
    dev = std::max(dev, (serial.x - parallel.x).cwiseAbs().maxCoeff());
    dev = std::max(dev,
                   (serial.lambda - parallel.lambda).cwiseAbs().maxCoeff());
  }
  return dev;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f,
                   const Vector& x, double h) {
  Vector g(x.size());
  Vector p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double hi = h * (1.0 + std::abs(x(i)));
    p(i) = x(i) + hi;
    const double up = f(p);
    p(i) = x(i) - hi;
    const double down = f(p);
    p(i) = x(i);
    g(i) = (up - down) / (2.0 * hi);
  }
  return g;
}

Vector stationary_multiplier(const ProblemInstance& instance) {
  const Matrix W = dense_kron_w(instance.topology);
  Vector g;
  instance.grad_f_stacked(instance.x_opt_stacked(), g);
  Eigen::SelfAdjointEigenSolver<Matrix> es(W);
  const Vector evals = es.eigenvalues();
  const double cutoff = 1e-10 * evals.cwiseAbs().maxCoeff();
  Vector coeffs = es.eigenvectors().transpose() * (-g);
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    coeffs(i) = std::abs(evals(i)) > cutoff ? coeffs(i) / evals(i) : 0.0;
  return es.eigenvectors() * coeffs;
}

namespace {

CheckResult check_topology() {
  Fail f;
  Rng rng(1);
  double worst_apply = 0.0, worst_gap = 0.0;
  for (int n = 2; n <= 8; ++n) {
    for (int d = 1; d <= 3; ++d) {
      Graph g = erdos_renyi(n, 0.6, static_cast<std::uint64_t>(10 * n + d));
      ConsensusMatrix cm = ConsensusMatrix::degree_weights(g, d);
      const Matrix& Z = cm.Z();
      f.expect((Z * Vector::Ones(n) - Vector::Ones(n)).cwiseAbs().maxCoeff() <=
                   1e-12,
               "row sums");
      f.expect((Z - Z.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "symmetry");
      Eigen::SelfAdjointEigenSolver<Matrix> es(Z, Eigen::EigenvaluesOnly);
      f.expect(es.eigenvalues().minCoeff() >= -1.0 - 1e-12 &&
                   es.eigenvalues().maxCoeff() <= 1.0 + 1e-12,
               "spectrum range");
      f.expect(cm.gamma() < 1.0, "gamma < 1");

      const Matrix W = dense_kron_w(cm);
      for (int rep = 0; rep < 10; ++rep) {
        const Vector v = random_vector(rng, static_cast<Eigen::Index>(n) * d);
        const Vector blockwise = cm.apply_W(v);
        const Vector dense = W * v;
        worst_apply = std::max(
            worst_apply, (blockwise - dense).norm() / std::max(1.0, dense.norm()));
      }
      const Vector y = random_vector(rng, d);
      Vector consensus(static_cast<Eigen::Index>(n) * d);
      for (int i = 0; i < n; ++i)
        consensus.segment(static_cast<Eigen::Index>(i) * d, d) = y;
      f.expect(cm.apply_W(consensus).norm() <= 1e-12 * std::max(1.0, y.norm()),
               "consensus annihilation");

      Eigen::SelfAdjointEigenSolver<Matrix> ew(W, Eigen::EigenvaluesOnly);
      double smallest_pos = 2.0;
      for (Eigen::Index i = 0; i < ew.eigenvalues().size(); ++i)
        if (ew.eigenvalues()(i) > 1e-8)
          smallest_pos = std::min(smallest_pos, ew.eigenvalues()(i));
      worst_gap =
          std::max(worst_gap, std::abs(smallest_pos - cm.spectral_gap()));
    }
  }
  f.expect(worst_apply <= 1e-12, "apply_W vs dense Kronecker");
  f.expect(worst_gap <= 1e-10, "spectral gap identity");
  std::ostringstream ok;
  ok << "apply_W dev " << worst_apply << ", gap dev " << worst_gap;
  return finish("topology invariants", f, ok.str());
}

CheckResult check_objectives() {
  Fail f;
  Rng rng(2);
  const std::vector<ProblemInstance> instances{ring_toy(), small_least_squares(),
                                               small_logistic()};
  double worst = 0.0;
  for (const auto& inst : instances) {
    for (const auto& obj : inst.objectives) {
      for (int rep = 0; rep < 20; ++rep) {
        const Vector x = random_vector(rng, obj->dim());
        const Vector grad = obj->gradient(x);
        const Vector fd = fd_gradient(
            [&](const Vector& p) { return obj->value(p); }, x, 1e-6);
        worst = std::max(worst,
                         (grad - fd).norm() / std::max(1.0, grad.norm()));
        const Matrix hess = obj->hessian(x);
        Matrix fdh(obj->dim(), obj->dim());
        for (int j = 0; j < obj->dim(); ++j) {
          Vector p = x;
          const double h = 1e-6 * (1.0 + std::abs(x(j)));
          p(j) = x(j) + h;
          const Vector up = obj->gradient(p);
          p(j) = x(j) - h;
          const Vector dn = obj->gradient(p);
          fdh.col(j) = (up - dn) / (2.0 * h);
        }
        worst = std::max(worst,
                         (hess - fdh).norm() / std::max(1.0, hess.norm()));
        Eigen::SelfAdjointEigenSolver<Matrix> es(hess, Eigen::EigenvaluesOnly);
        f.expect(es.eigenvalues().minCoeff() >=
                         obj->strong_convexity() - 1e-9 &&
                     es.eigenvalues().maxCoeff() <= obj->smoothness() + 1e-9,
                 "hessian eigenvalue bounds");
      }
    }
  }
  f.expect(worst <= 1e-6, "finite differences");
  std::ostringstream ok;
  ok << "max fd deviation " << worst;
  return finish("objective oracles", f, ok.str());
}

CheckResult check_engine_equivalence() {
  Fail f;
  const std::vector<ProblemInstance> instances{ring_toy(), small_least_squares(),
                                               small_logistic()};
  double worst = 0.0;
  int idx = 0;
  for (const auto& inst : instances) {
    const std::vector<UpdateSchedule> schedules{
        UpdateSchedule::constant(inst.n(), kGradientUpdate),
        UpdateSchedule::dish_k(inst.n(), 2),
        UpdateSchedule::switching_uniform(inst.n(), 5, 50,
                                          static_cast<std::uint64_t>(idx + 1))};
    for (double mu : {0.0, 1.0}) {
      for (const auto& sched : schedules) {
        const StepsizeBounds bounds =
            theoretical_stepsizes(build_catalog(inst, mu, sched));
        worst =
            std::max(worst, max_engine_deviation(inst, sched, bounds.steps, 60));
        f.expect(max_serial_omp_deviation(inst, sched, bounds.steps, 30) == 0.0,
                 "serial vs OpenMP not bit-identical");
      }
    }
    ++idx;
  }
  f.expect(worst <= 1e-12, "compact vs distributed above 1e-12");
  std::ostringstream ok;
  ok << "max deviation " << worst;
  return finish("engine equivalence", f, ok.str());
}

CheckResult check_special_cases() {
  Fail f;
  const std::vector<ProblemInstance> instances{ring_toy(),
                                               small_least_squares()};
  double worst_ah = 0.0, worst_esom = 0.0;
  for (const auto& inst : instances) {
    const int n = inst.n(), d = inst.d();
    Rng rng(5);
    const Vector x0 = random_vector(rng, static_cast<Eigen::Index>(n) * d);
    const Vector l0 = random_vector(rng, static_cast<Eigen::Index>(n) * d);
    for (double mu : {0.0, 1.0}) {
      {
        const UpdateSchedule sched =
            UpdateSchedule::constant(n, kGradientUpdate);
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
        const auto ref = reference::esom0(inst, steps.a, steps.b, mu, x0, l0, 50);
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
  f.expect(worst_ah <= 1e-12, "Arrow-Hurwicz reduction");
  f.expect(worst_esom <= 1e-12, "ESOM-0 reduction");
  std::ostringstream ok;
  ok << "AH dev " << worst_ah << ", ESOM-0 dev " << worst_esom;
  return finish("special-case reductions", f, ok.str());
}

CheckResult check_fixed_point() {
  Fail f;
  const ProblemInstance inst = ring_toy();
  const int n = inst.n();
  const Vector x_star = inst.x_opt_stacked();
  const Vector lambda_star = stationary_multiplier(inst);
  const std::vector<UpdateSchedule> schedules{
      UpdateSchedule::constant(n, kGradientUpdate),
      UpdateSchedule::constant(n, kNewtonUpdate),
      UpdateSchedule::constant(n, kEsomUpdate),
      UpdateSchedule::dish_k(n, 2),
      UpdateSchedule::switching_uniform(n, 5, 50, 9)};
  double worst = 0.0;
  for (double mu : {0.0, 1.0}) {
    for (const auto& sched : schedules) {
      const Stepsizes steps = Stepsizes::uniform(n, 0.3, 0.2, mu);
      RunState s{x_star, lambda_star, 0};
      const RunState next = step_compact(s, inst, sched, steps);
      worst = std::max(worst, (next.x - x_star).cwiseAbs().maxCoeff());
      worst =
          std::max(worst, (next.lambda - lambda_star).cwiseAbs().maxCoeff());
    }
  }
  f.expect(worst <= 1e-12, "stationarity");
  std::ostringstream ok;
  ok << "max drift " << worst;
  return finish("fixed-point property", f, ok.str());
}

CheckResult check_dual_calculus() {
  Fail f;
  Rng rng(6);
  const std::vector<ProblemInstance> instances{ring_toy(),
                                               small_least_squares()};
  double worst_fd = 0.0, worst_identity = 0.0;
  for (const auto& inst : instances) {
    const Eigen::Index nd = static_cast<Eigen::Index>(inst.n()) * inst.d();
    for (double mu : {0.0, 0.5}) {
      for (int rep = 0; rep < 5; ++rep) {
        const Vector lambda = random_vector(rng, nd);
        const DualEval eval = dual_value_grad(inst, mu, lambda);
        const Vector fd = fd_gradient(
            [&](const Vector& l) {
              return dual_value_grad(inst, mu, l).g;
            },
            lambda, 1e-5);
        worst_fd = std::max(
            worst_fd, (eval.grad - fd).norm() / std::max(1.0, eval.grad.norm()));

        const Vector x = random_vector(rng, nd);
        const DualNewtonStep step = dual_newton_step_exact(inst, mu, x, lambda);
        worst_identity = std::max(worst_identity, step.identity_residual);
      }
    }
  }
  // exactness of the dual Hessian estimate under a complete graph with
  // identical local Hessians
  {
    Rng crng(8);
    std::vector<Vector> centers;
    for (int i = 0; i < 4; ++i) centers.push_back(random_vector(crng, 2));
    const ProblemInstance toy = make_quadratic_toy(centers);
    const Eigen::Index nd = 8;
    const Vector x = random_vector(crng, nd);
    const DualNewtonStep exact =
        dual_newton_step_exact(toy, 0.0, x, Vector::Zero(nd));
    const Matrix W = dense_kron_w(toy.topology);
    const Matrix H = dense_block_hessian(toy, x);
    const Vector approx = -W * (H * (W * x));
    const Vector projected = W * (W * exact.delta_lambda);
    f.expect((projected - approx).norm() <= 1e-10 * std::max(1.0, approx.norm()),
             "complete-graph dual Hessian estimate");
  }
  f.expect(worst_fd <= 1e-5, "dual gradient vs finite differences");
  f.expect(worst_identity <= 1e-8, "dual Newton identity");
  std::ostringstream ok;
  ok << "fd dev " << worst_fd << ", identity residual " << worst_identity;
  return finish("dual calculus", f, ok.str());
}

CheckResult check_curvature_bounds() {
  Fail f;
  Rng rng(12);
  int linear_gap_violations = 0;
  const std::vector<ProblemInstance> instances{ring_toy(), small_logistic()};
  for (const auto& inst : instances) {
    const Eigen::Index nd = static_cast<Eigen::Index>(inst.n()) * inst.d();
    for (double mu : {0.0, 1.0}) {
      const Matrix W = dense_kron_w(inst.topology);
      for (int rep = 0; rep < 10; ++rep) {
        const Vector x = random_vector(rng, nd);
        Matrix H = dense_block_hessian(inst, x);
        H.noalias() += mu * W;
        Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
        f.expect(es.eigenvalues().minCoeff() >= inst.s - 1e-9,
                 "sector lower bound");
        f.expect(es.eigenvalues().maxCoeff() <= inst.l + 2.0 * mu + 1e-9,
                 "sector upper bound");
      }

      const double g_opt = optimal_dual_value(inst);
      const double gap = 1.0 - inst.topology.gamma();
      const double p_g_squared = gap * gap / (inst.l + 2.0 * mu);
      const double p_g_linear = gap / (inst.l + 2.0 * mu);
      for (int rep = 0; rep < 10; ++rep) {
        const Vector lambda = random_vector(rng, nd);
        const DualEval eval = dual_value_grad(inst, mu, lambda);
        f.expect(g_opt - eval.g <=
                     eval.grad.squaredNorm() / (2.0 * p_g_squared) + 1e-9,
                 "PL inequality (squared gap)");
        if (g_opt - eval.g >
            eval.grad.squaredNorm() / (2.0 * p_g_linear) + 1e-9)
          ++linear_gap_violations;
      }
      for (int rep = 0; rep < 20; ++rep) {
        const Vector l1 = random_vector(rng, nd);
        const Vector l2 = random_vector(rng, nd);
        const Vector g1 = dual_value_grad(inst, mu, l1).grad;
        const Vector g2 = dual_value_grad(inst, mu, l2).grad;
        f.expect((g1 - g2).norm() <=
                     (4.0 / inst.s) * (l1 - l2).norm() + 1e-9,
                 "dual Lipschitz constant");
      }
    }
  }
  std::ostringstream ok;
  ok << "sector, PL (squared gap), and Lipschitz bounds hold";
  if (linear_gap_violations > 0)
    ok << "; linear-gap PL variant violated at " << linear_gap_violations
       << "/40 points (expected off complete graphs)";
  return finish("curvature bounds", f, ok.str());
}

CheckResult check_contraction() {
  Fail f;
  const std::vector<ProblemInstance> instances{ring_toy(),
                                               small_least_squares()};
  double worst_contr = std::numeric_limits<double>::infinity();
  double worst_p1 = worst_contr, worst_p2 = worst_contr;
  for (const auto& inst : instances) {
    const int n = inst.n();
    const std::vector<UpdateSchedule> schedules{
        UpdateSchedule::constant(n, kGradientUpdate),
        UpdateSchedule::constant(n, kNewtonUpdate),
        UpdateSchedule::dish_k(n, 2),
        UpdateSchedule::switching_uniform(n, 5, 50, 21)};
    for (double mu : {0.0, 1.0}) {
      for (const auto& sched : schedules) {
        const ConstantCatalog cat = build_catalog(inst, mu, sched);
        const StepsizeBounds bounds = theoretical_stepsizes(cat);
        DiagnosticsOptions diag_opts;
        diag_opts.rho = bounds.rho;
        DiagnosticsRecorder recorder(inst, sched, bounds.steps, cat, diag_opts);
        RunOptions opts;
        opts.max_iters = 200;
        opts.target_rel_err = 1e-14;
        opts.trace_stride = 0;
        opts.diagnostics = &recorder;
        const Trace trace = run(inst, sched, bounds.steps, opts);
        f.expect(!trace.diverged, "diverged under theoretical stepsizes");
        worst_contr = std::min(worst_contr, recorder.min_contraction_slack());
        worst_p1 = std::min(worst_p1, recorder.min_prop1_slack());
        worst_p2 = std::min(worst_p2, recorder.min_prop2_slack());
        f.expect(recorder.max_envelope_violation() <= 1e-9,
                 "convergence envelope violated");
      }
    }
  }
  f.expect(worst_contr >= -1e-9, "merit contraction violated");
  f.expect(worst_p1 >= -1e-7, "prop1 slack violated");
  f.expect(worst_p2 >= -1e-7, "prop2 slack violated");
  std::ostringstream ok;
  ok << "min slacks: contraction " << worst_contr << ", prop1 " << worst_p1
     << ", prop2 " << worst_p2;
  return finish("merit contraction and step inequalities", f, ok.str());
}

CheckResult check_determinism() {
  Fail f;
  const ProblemInstance inst = ring_toy();
  const UpdateSchedule sched =
      UpdateSchedule::switching_uniform(inst.n(), 5, 50, 33);
  const UpdateSchedule sched2 =
      UpdateSchedule::switching_uniform(inst.n(), 5, 50, 33);
  for (int i = 0; i < inst.n(); ++i)
    for (long k : {0L, 7L, 100L})
      f.expect(sched.kind(i, k) == sched2.kind(i, k),
               "schedule not deterministic");

  const Stepsizes steps = Stepsizes::uniform(inst.n(), 0.3, 0.01, 0.5);
  RunOptions opts;
  opts.max_iters = 150;
  opts.target_rel_err = 1e-13;
  std::ostringstream csv1, csv2;
  run(inst, sched, steps, opts).write_csv(csv1);
  run(inst, sched, steps, opts).write_csv(csv2);
  f.expect(csv1.str() == csv2.str(), "trace CSV not byte-identical");
  return finish("determinism", f, "schedules and traces reproduce");
}

}  // namespace

std::vector<CheckResult> run_verification() {
  using CheckFn = CheckResult (*)();
  const std::vector<std::pair<const char*, CheckFn>> checks{
      {"topology invariants", &check_topology},
      {"objective oracles", &check_objectives},
      {"engine equivalence", &check_engine_equivalence},
      {"special-case reductions", &check_special_cases},
      {"fixed-point property", &check_fixed_point},
      {"dual calculus", &check_dual_calculus},
      {"curvature bounds", &check_curvature_bounds},
      {"merit contraction and step inequalities", &check_contraction},
      {"determinism", &check_determinism}};
  std::vector<CheckResult> results;
  for (const auto& [name, fn] : checks) {
    try {
      results.push_back(fn());
    } catch (const std::exception& e) {
      results.push_back(CheckResult{name, false, e.what()});
    }
  }
  return results;
}

}  // namespace dish
