#include "dish/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace dish {

namespace {

Matrix dense_lift_W(const ConsensusMatrix& cm) {
  const int n = cm.n();
  const int d = cm.d();
  const Matrix& Z = cm.Z();
  Matrix W = Matrix::Zero(static_cast<Eigen::Index>(n) * d,
                          static_cast<Eigen::Index>(n) * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double w = (i == j ? 1.0 : 0.0) - Z(i, j);
      if (w != 0.0)
        W.block(static_cast<Eigen::Index>(i) * d,
                static_cast<Eigen::Index>(j) * d, d, d) =
            w * Matrix::Identity(d, d);
    }
  return W;
}

Matrix block_hessian(const ProblemInstance& instance, const Vector& x) {
  const int n = instance.n();
  const int d = instance.d();
  Matrix H = Matrix::Zero(static_cast<Eigen::Index>(n) * d,
                          static_cast<Eigen::Index>(n) * d);
  Matrix hi(d, d);
  for (int i = 0; i < n; ++i) {
    instance.objectives[static_cast<std::size_t>(i)]->hessian_into(
        x.segment(static_cast<Eigen::Index>(i) * d, d), hi);
    H.block(static_cast<Eigen::Index>(i) * d, static_cast<Eigen::Index>(i) * d,
            d, d) = hi;
  }
  return H;
}

}  // namespace

double ConstantCatalog::alpha_lower(const Stepsizes& steps) const {
  return (steps.a.array() * p_lo.array()).minCoeff();
}

double ConstantCatalog::beta_lower(const Stepsizes& steps) const {
  return (steps.b.array() * q_lo.array()).minCoeff();
}

double ConstantCatalog::beta_upper(const Stepsizes& steps) const {
  return (steps.b.array() * q_hi.array()).maxCoeff();
}

ConstantCatalog build_catalog(const ProblemInstance& instance, double mu,
                              const UpdateSchedule& schedule) {
  if (schedule.agents() != instance.n()) throw Error("schedule size mismatch");
  ConstantCatalog cat;
  cat.s = instance.s;
  cat.l = instance.l;
  cat.mu = mu;
  cat.gamma = instance.topology.gamma();
  const int n = instance.n();
  cat.p_lo.resize(n);
  cat.p_hi.resize(n);
  cat.q_lo.resize(n);
  cat.q_hi.resize(n);
  for (int i = 0; i < n; ++i) {
    const double si =
        instance.objectives[static_cast<std::size_t>(i)]->strong_convexity();
    const double li =
        instance.objectives[static_cast<std::size_t>(i)]->smoothness();
    const double zii = instance.topology.self_weight(i);
    double plo = std::numeric_limits<double>::infinity(), phi = 0.0;
    double qlo = std::numeric_limits<double>::infinity(), qhi = 0.0;
    for (const UpdateKind kind : schedule.possible_kinds(i)) {
      switch (kind.primal) {
        case PrimalKind::Gradient:
          plo = std::min(plo, 1.0);
          phi = std::max(phi, 1.0);
          break;
        case PrimalKind::Newton:
          plo = std::min(plo, std::min(1.0, 1.0 / (li + mu)));
          phi = std::max(phi, std::max(1.0, 1.0 / (si + mu)));
          break;
        case PrimalKind::Esom:
          plo = std::min(plo, std::min(1.0, 1.0 / (li + mu * (1.0 - zii))));
          phi = std::max(phi, std::max(1.0, 1.0 / (si + mu * (1.0 - zii))));
          break;
      }
      if (kind.dual == DualKind::Gradient) {
        qlo = std::min(qlo, 1.0);
        qhi = std::max(qhi, 1.0);
      } else {
        qlo = std::min(qlo, std::min(1.0, si + mu));
        qhi = std::max(qhi, std::max(1.0, li + mu));
      }
    }
    cat.p_lo(i) = plo;
    cat.p_hi(i) = phi;
    cat.q_lo(i) = qlo;
    cat.q_hi(i) = qhi;
  }
  return cat;
}

double lagrangian(const ProblemInstance& instance, double mu, const Vector& x,
                  const Vector& lambda) {
  const Vector wx = instance.topology.apply_W(x);
  return instance.f_stacked(x) + lambda.dot(wx) + 0.5 * mu * x.dot(wx);
}

Vector lagrangian_grad(const ProblemInstance& instance, double mu,
                       const Vector& x, const Vector& lambda) {
  Vector g;
  instance.grad_f_stacked(x, g);
  g += instance.topology.apply_W(lambda);
  g.noalias() += mu * instance.topology.apply_W(x);
  return g;
}

InnerSolver::InnerSolver(const ProblemInstance& instance, double mu,
                         double tol, int max_iters)
    : instance_(instance),
      mu_(mu),
      tol_(tol),
      max_iters_(max_iters),
      W_(dense_lift_W(instance.topology)),
      constant_(instance.constant_hessian()) {
  if (!(tol > 0.0)) throw Error("inner solve tolerance must be positive");
  if (constant_) {
    Matrix H = block_hessian(instance_, Vector::Zero(W_.rows()));
    H.noalias() += mu_ * W_;
    const_ldlt_.compute(H);
  }
}

Matrix InnerSolver::hessian_at(const Vector& x) const {
  Matrix H = block_hessian(instance_, x);
  H.noalias() += mu_ * W_;
  return H;
}

InnerSolve InnerSolver::solve(const Vector& lambda) const {
  return solve(lambda, instance_.x_opt_stacked());
}

InnerSolve InnerSolver::solve(const Vector& lambda,
                              const Vector& x_start) const {
  Vector x = x_start;
  Vector grad;
  for (int it = 0; it < max_iters_; ++it) {
    grad = lagrangian_grad(instance_, mu_, x, lambda);
    const double gnorm = grad.norm();
    if (gnorm <= tol_) return InnerSolve{std::move(x), gnorm, it};
    Vector step;
    if (constant_) {
      step = const_ldlt_.solve(grad);
    } else {
      step = hessian_at(x).ldlt().solve(grad);
    }
    // Armijo backtracking with an absolute tolerance at the rounding floor
    // of L, so full Newton steps stay accepted near the minimizer
    const double v0 = lagrangian(instance_, mu_, x, lambda);
    const double noise = 1e-13 * (1.0 + std::abs(v0));
    const double slope = grad.dot(step);
    double t = 1.0;
    while (t > 1e-12 &&
           lagrangian(instance_, mu_, x - t * step, lambda) >
               v0 - 1e-4 * t * slope + noise)
      t *= 0.5;
    x -= t * step;
  }
  throw Error("inner solve failed");
}

InnerSolve inner_minimizer(const ProblemInstance& instance, double mu,
                           const Vector& lambda, double tol) {
  return InnerSolver(instance, mu, tol).solve(lambda);
}

DualEval dual_value_grad(const ProblemInstance& instance, double mu,
                         const Vector& lambda, double tol) {
  InnerSolve inner = inner_minimizer(instance, mu, lambda, tol);
  DualEval out;
  out.g = lagrangian(instance, mu, inner.x_star, lambda);
  out.grad = instance.topology.apply_W(inner.x_star);
  out.inner = std::move(inner);
  return out;
}

DualNewtonStep dual_newton_step_exact(const ProblemInstance& instance,
                                      double mu, const Vector& x,
                                      const Vector& lambda) {
  const int n = instance.n();
  const int d = instance.d();
  const Eigen::Index nd = static_cast<Eigen::Index>(n) * d;
  if (nd > 200) throw Error("dense dual Newton solve limited to nd <= 200");
  if (x.size() != nd || lambda.size() != nd)
    throw Error("state dimension mismatch");

  const Matrix W = dense_lift_W(instance.topology);
  Matrix H = block_hessian(instance, x);
  H.noalias() += mu * W;

  Matrix M = W * H.ldlt().solve(W);
  M = 0.5 * (M + M.transpose()).eval();
  const Vector rhs = -W * x;

  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  const Vector evals = es.eigenvalues();
  const double cutoff = 1e-10 * evals.cwiseAbs().maxCoeff();
  Vector coeffs = es.eigenvectors().transpose() * rhs;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    coeffs(i) = std::abs(evals(i)) > cutoff ? coeffs(i) / evals(i) : 0.0;
  DualNewtonStep out;
  out.delta_lambda = es.eigenvectors() * coeffs;

  out.system_residual = (M * out.delta_lambda - rhs).norm();
  if (out.system_residual > 1e-6 * std::max(1.0, rhs.norm()))
    throw Error("inconsistent system");

  Matrix h_sum = Matrix::Zero(d, d);
  Vector hx_sum = Vector::Zero(d);
  Matrix hi(d, d);
  for (int i = 0; i < n; ++i) {
    const auto xi = x.segment(static_cast<Eigen::Index>(i) * d, d);
    instance.objectives[static_cast<std::size_t>(i)]->hessian_into(xi, hi);
    h_sum += hi;
    hx_sum.noalias() += hi * xi;
  }
  out.y = h_sum.ldlt().solve(hx_sum);

  Vector consensus_y(nd);
  for (int i = 0; i < n; ++i)
    consensus_y.segment(static_cast<Eigen::Index>(i) * d, d) = out.y;
  const Vector target = H * (consensus_y - x);
  out.identity_residual = (W * out.delta_lambda - target).norm();
  return out;
}

double optimal_dual_value(const ProblemInstance& instance) {
  return instance.f_stacked(instance.x_opt_stacked());
}

MeritEvaluator::MeritEvaluator(const ProblemInstance& instance, double mu,
                               double tol)
    : instance_(instance),
      mu_(mu),
      solver_(instance, mu, tol),
      g_opt_(dish::optimal_dual_value(instance)) {}

MeritReport MeritEvaluator::merit(const RunState& state) const {
  return merit(state, nullptr);
}

MeritReport MeritEvaluator::merit(const RunState& state,
                                  InnerSolve* inner_out) const {
  InnerSolve inner = solver_.solve(state.lambda, state.x);
  const double g_val = lagrangian(instance_, mu_, inner.x_star, state.lambda);
  MeritReport report;
  report.delta_x =
      lagrangian(instance_, mu_, state.x, state.lambda) - g_val;
  report.delta_lambda = g_opt_ - g_val;
  report.delta = 9.0 * report.delta_lambda + report.delta_x;
  if (inner_out) *inner_out = std::move(inner);
  return report;
}

MeritReport merit(const ProblemInstance& instance, double mu,
                  const RunState& state, double lambda_star_value,
                  double tol) {
  InnerSolve inner = InnerSolver(instance, mu, tol).solve(state.lambda, state.x);
  const double g_val = lagrangian(instance, mu, inner.x_star, state.lambda);
  MeritReport report;
  report.delta_x = lagrangian(instance, mu, state.x, state.lambda) - g_val;
  report.delta_lambda = lambda_star_value - g_val;
  report.delta = 9.0 * report.delta_lambda + report.delta_x;
  return report;
}

StepsizeBounds theoretical_stepsizes(const ConstantCatalog& catalog) {
  const int n = static_cast<int>(catalog.p_hi.size());
  StepsizeBounds out;
  Vector a(n), b(n);
  const double primal_denom = catalog.s / 16.0 + catalog.l + 2.0 * catalog.mu;
  for (int i = 0; i < n; ++i) a(i) = 1.0 / (2.0 * catalog.p_hi(i) * primal_denom);
  Stepsizes steps;
  steps.a = a;
  steps.b = Vector::Ones(n);  // placeholder for alpha_lower
  steps.mu = catalog.mu;
  const double alpha = (a.array() * catalog.p_lo.array()).minCoeff();
  const double b_num =
      std::min(catalog.s / 64.0, alpha * catalog.s * catalog.s / 60.0);
  for (int i = 0; i < n; ++i) b(i) = b_num / catalog.q_hi(i);
  steps.b = b;
  out.steps = steps;
  out.alpha_lower = alpha;
  out.beta_lower = (b.array() * catalog.q_lo.array()).minCoeff();
  out.beta_upper = (b.array() * catalog.q_hi.array()).maxCoeff();
  const double gap = 1.0 - catalog.gamma;
  out.rho = std::min(gap * out.beta_lower / (9.0 * (catalog.l + 4.0 * catalog.mu)),
                     catalog.s * alpha / 2.0);
  out.rho_proof =
      std::min(gap * out.beta_lower / (9.0 * (catalog.l + 2.0 * catalog.mu)),
               catalog.s * alpha / 2.0);
  return out;
}

double convergence_envelope(const ConstantCatalog& catalog, double delta0,
                            double rho, long k) {
  const double ll = catalog.l_L();
  const double c =
      4.0 * ll * delta0 / (catalog.s * std::min(ll, 9.0 * catalog.s));
  return c * std::pow(1.0 - rho, static_cast<double>(k));
}

namespace {

PropositionSlacks eval_propositions(
    const ProblemInstance& instance, double mu, const RunState& state_k,
    const ConstantCatalog& catalog, const Stepsizes& steps,
    const UpdateSchedule& schedule, const MeritReport& merit_k,
    const Vector& x_star_k, const MeritReport& merit_k1) {
  const int n = instance.n();
  const int d = instance.d();
  PropositionSlacks out;
  out.merit_k = merit_k;
  out.merit_k1 = merit_k1;

  const Vector grad_g = instance.topology.apply_W(x_star_k);
  const Vector grad_l =
      lagrangian_grad(instance, mu, state_k.x, state_k.lambda);
  const double beta = catalog.beta_upper(steps);
  const double lg = catalog.l_g();
  const double ll = catalog.l_L();
  const double s2 = catalog.s * catalog.s;

  double norm_g_bq = 0.0;  // || grad g ||^2_{B Q^k}
  double norm_d = -(12.0 * beta / s2) * grad_l.squaredNorm();
  for (int i = 0; i < n; ++i) {
    const auto& obj = *instance.objectives[static_cast<std::size_t>(i)];
    const auto xi = state_k.x.segment(static_cast<Eigen::Index>(i) * d, d);
    const UpdateKind kind = schedule.kind(i, state_k.k);

    const auto gi = grad_g.segment(static_cast<Eigen::Index>(i) * d, d);
    const Matrix q = dual_update_matrix(kind.dual, obj, xi, mu);
    norm_g_bq += steps.b(i) * gi.dot(q * gi);

    const auto li = grad_l.segment(static_cast<Eigen::Index>(i) * d, d);
    const Matrix p = primal_update_matrix(kind.primal, obj, xi, mu,
                                          instance.topology.self_weight(i));
    const double a_eff = steps.primal_step(i, kind.primal);
    const Vector pu = p * li;
    norm_d += a_eff * li.dot(pu) -
              (2.0 * beta + 0.5 * ll) * a_eff * a_eff * pu.squaredNorm();
  }

  const double grad_l2 = grad_l.squaredNorm();
  out.prop1 = merit_k.delta_lambda - (0.5 - beta * lg) * norm_g_bq +
              (0.5 + beta * lg) * (4.0 * beta / s2) * grad_l2 -
              merit_k1.delta_lambda;
  out.prop2 = merit_k.delta_x + 3.0 * norm_g_bq - norm_d +
              merit_k.delta_lambda - merit_k1.delta_lambda - merit_k1.delta_x;
  return out;
}

}  // namespace

PropositionSlacks verify_proposition_bounds(const ProblemInstance& instance,
                                            double mu, const RunState& state_k,
                                            const RunState& state_k1,
                                            const ConstantCatalog& catalog,
                                            const Stepsizes& steps,
                                            const UpdateSchedule& schedule,
                                            double tol) {
  MeritEvaluator eval(instance, mu, tol);
  InnerSolve inner_k;
  const MeritReport mk = eval.merit(state_k, &inner_k);
  const MeritReport mk1 = eval.merit(state_k1);
  return eval_propositions(instance, mu, state_k, catalog, steps, schedule, mk,
                           inner_k.x_star, mk1);
}

DiagnosticsRecorder::DiagnosticsRecorder(const ProblemInstance& instance,
                                         const UpdateSchedule& schedule,
                                         const Stepsizes& steps,
                                         const ConstantCatalog& catalog,
                                         DiagnosticsOptions options)
    : instance_(instance),
      schedule_(schedule),
      steps_(steps),
      catalog_(catalog),
      options_(options),
      eval_(instance, steps.mu),
      x_opt_stacked_(instance.x_opt_stacked()) {}

void DiagnosticsRecorder::on_initial(const RunState& state, TraceRow& row) {
  InnerSolve inner;
  const MeritReport m = eval_.merit(state, &inner);
  row.merit = m.delta;
  row.dual_gap = m.delta_lambda;
  row.primal_err = m.delta_x;
  delta0_ = m.delta;
  const double ll = catalog_.l_L();
  envelope_c_ =
      4.0 * ll * delta0_ / (catalog_.s * std::min(ll, 9.0 * catalog_.s));
  if (options_.envelope) {
    row.envelope = envelope_c_;
    const double sqerr = (state.x - x_opt_stacked_).squaredNorm();
    max_envelope_violation_ =
        std::max(max_envelope_violation_, sqerr - envelope_c_);
  }
  prev_merit_ = m;
  prev_x_star_ = std::move(inner.x_star);
  has_prev_ = true;
}

void DiagnosticsRecorder::on_step(const RunState& prev, const RunState& next,
                                  TraceRow& row) {
  if (options_.envelope) {
    const double env = envelope_c_ *
                       std::pow(1.0 - options_.rho, static_cast<double>(row.k));
    row.envelope = env;
    const double sqerr = (next.x - x_opt_stacked_).squaredNorm();
    max_envelope_violation_ = std::max(max_envelope_violation_, sqerr - env);
  }

  const bool do_merit =
      options_.merit_max_k < 0 || row.k <= options_.merit_max_k;
  if (!do_merit) {
    has_prev_ = false;
    return;
  }

  InnerSolve inner;
  const MeritReport m = eval_.merit(next, &inner);
  row.merit = m.delta;
  row.dual_gap = m.delta_lambda;
  row.primal_err = m.delta_x;

  if (has_prev_) {
    min_contraction_ = std::min(
        min_contraction_, (1.0 - options_.rho) * prev_merit_.delta - m.delta);
    if (options_.propositions) {
      const PropositionSlacks slacks =
          eval_propositions(instance_, steps_.mu, prev, catalog_, steps_,
                            schedule_, prev_merit_, prev_x_star_, m);
      row.prop1_slack = slacks.prop1;
      row.prop2_slack = slacks.prop2;
      min_prop1_ = std::min(min_prop1_, slacks.prop1);
      min_prop2_ = std::min(min_prop2_, slacks.prop2);
    }
    ++steps_evaluated_;
  }
  prev_merit_ = m;
  prev_x_star_ = std::move(inner.x_star);
  has_prev_ = true;
}

}  // namespace dish
