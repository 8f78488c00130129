#pragma once

#include <limits>
#include <memory>

#include "dish/engine.hpp"
#include "dish/objectives.hpp"
#include "dish/schedule.hpp"
#include "dish/types.hpp"

namespace dish {

/// Constants of the convergence theory for one (instance, mu, schedule)
/// triple: aggregate curvature bounds, the spectral gap, and per-agent
/// eigenvalue bounds on the update matrices P_i^k and Q_i^k.
struct ConstantCatalog {
  double s = 0.0;
  double l = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  Vector p_lo, p_hi, q_lo, q_hi;

  double l_L() const { return l + 2.0 * mu; }
  double p_g() const { return (1.0 - gamma) / (l + 2.0 * mu); }
  /// PL constant with the spectral gap entering squared, as the conjugate
  /// composition with W actually yields; p_g() keeps the stated linear-gap
  /// form, which is tight only for complete graphs (gamma = 0).
  double p_g_squared_gap() const {
    return (1.0 - gamma) * (1.0 - gamma) / (l + 2.0 * mu);
  }
  double l_g() const { return 4.0 / s; }

  /// min_i a_i p_lo_i, a lower bound on the eigenvalues of A P^k.
  double alpha_lower(const Stepsizes& steps) const;
  /// min_i b_i q_lo_i and max_i b_i q_hi_i (lower/upper bounds for B Q^k).
  double beta_lower(const Stepsizes& steps) const;
  double beta_upper(const Stepsizes& steps) const;
};

/// Resolves per-agent update-matrix bounds from the kinds each agent can
/// take under the schedule: gradient-only agents get exact unit bounds,
/// agents that may take Newton-type updates get the hybrid min/max bounds.
ConstantCatalog build_catalog(const ProblemInstance& instance, double mu,
                              const UpdateSchedule& schedule);

/// Augmented Lagrangian L(x, lambda) = f(x) + lambda' W x + (mu/2) x' W x.
double lagrangian(const ProblemInstance& instance, double mu, const Vector& x,
                  const Vector& lambda);
/// grad_x L = grad f(x) + W lambda + mu W x.
Vector lagrangian_grad(const ProblemInstance& instance, double mu,
                       const Vector& x, const Vector& lambda);

struct InnerSolve {
  Vector x_star;
  double grad_norm = 0.0;
  int iterations = 0;
};

/// Minimizer of the strongly convex inner problem L(., lambda) by damped
/// Newton iterations on the full nd x nd system; the Hessian factor is
/// cached when every local Hessian is constant.
class InnerSolver {
 public:
  InnerSolver(const ProblemInstance& instance, double mu, double tol = 1e-11,
              int max_iters = 200);

  InnerSolve solve(const Vector& lambda) const;
  InnerSolve solve(const Vector& lambda, const Vector& x_start) const;

  const Matrix& dense_W() const { return W_; }
  double tol() const { return tol_; }

 private:
  Matrix hessian_at(const Vector& x) const;

  const ProblemInstance& instance_;
  double mu_;
  double tol_;
  int max_iters_;
  Matrix W_;
  bool constant_ = false;
  Eigen::LDLT<Matrix> const_ldlt_;
};

/// One-shot wrapper around InnerSolver.
InnerSolve inner_minimizer(const ProblemInstance& instance, double mu,
                           const Vector& lambda, double tol = 1e-11);

struct DualEval {
  double g = 0.0;
  Vector grad;
  InnerSolve inner;
};

/// Dual function value g(lambda) = L(x*(lambda), lambda) and gradient
/// W x*(lambda).
DualEval dual_value_grad(const ProblemInstance& instance, double mu,
                         const Vector& lambda, double tol = 1e-11);

struct DualNewtonStep {
  Vector delta_lambda;       // minimum-norm solution
  Vector y;                  // Hessian-weighted average of local primals
  double system_residual = 0.0;
  double identity_residual = 0.0;  // || W dl - H (1 (x) y - x) ||
};

/// Exact dual Newton direction: minimum-norm solution of
/// -W (grad^2_xx L)^{-1} W dl = W x (dense pseudo-inverse with singular
/// value cutoff 1e-10 sigma_max), together with the weighted average y and
/// the residual of the characterizing identity.
DualNewtonStep dual_newton_step_exact(const ProblemInstance& instance,
                                      double mu, const Vector& x,
                                      const Vector& lambda);

struct MeritReport {
  double delta_lambda = 0.0;  // dual optimality gap
  double delta_x = 0.0;       // primal tracking error
  double delta = 0.0;         // 9 delta_lambda + delta_x
};

/// Optimal dual value g(lambda*); by strong duality this equals the
/// objective at the stacked centralized optimum.
double optimal_dual_value(const ProblemInstance& instance);

/// Evaluates the merit function at one state; the inner solve is warm
/// started at the state's primal iterate.
class MeritEvaluator {
 public:
  MeritEvaluator(const ProblemInstance& instance, double mu,
                 double tol = 1e-11);
  MeritReport merit(const RunState& state) const;
  MeritReport merit(const RunState& state, InnerSolve* inner_out) const;
  double optimal_dual_value() const { return g_opt_; }
  const InnerSolver& solver() const { return solver_; }

 private:
  const ProblemInstance& instance_;
  double mu_;
  InnerSolver solver_;
  double g_opt_;
};

MeritReport merit(const ProblemInstance& instance, double mu,
                  const RunState& state, double lambda_star_value,
                  double tol = 1e-11);

/// Maximal stepsizes satisfying the linear-convergence stepsize conditions,
/// together with the contraction rate. `rho` follows the stated rate with
/// denominator 9(l + 4 mu); `rho_proof` carries the tighter 9(l + 2 mu)
/// constant the analysis actually yields.
struct StepsizeBounds {
  Stepsizes steps;
  double rho = 0.0;
  double rho_proof = 0.0;
  double alpha_lower = 0.0;
  double beta_lower = 0.0;
  double beta_upper = 0.0;
};

StepsizeBounds theoretical_stepsizes(const ConstantCatalog& catalog);

/// Squared-error convergence envelope c (1 - rho)^k with
/// c = 4 l_L delta0 / (s min{l_L, 9 s}).
double convergence_envelope(const ConstantCatalog& catalog, double delta0,
                            double rho, long k);

struct PropositionSlacks {
  double prop1 = std::numeric_limits<double>::quiet_NaN();
  double prop2 = std::numeric_limits<double>::quiet_NaN();
  MeritReport merit_k;
  MeritReport merit_k1;
};

/// Evaluates both sides of the dual-gap and primal-error inequalities for
/// one recorded transition; positive slack means the inequality holds.
PropositionSlacks verify_proposition_bounds(const ProblemInstance& instance,
                                            double mu, const RunState& state_k,
                                            const RunState& state_k1,
                                            const ConstantCatalog& catalog,
                                            const Stepsizes& steps,
                                            const UpdateSchedule& schedule,
                                            double tol = 1e-11);

struct DiagnosticsOptions {
  bool propositions = true;
  bool envelope = true;
  /// Skip merit and proposition evaluation past this iteration (negative:
  /// never skip); the envelope stays active for the whole run.
  long merit_max_k = -1;
  double rho = 0.0;
};

/// DiagnosticsHook filling merit, proposition-slack, and envelope columns,
/// and tracking the worst observed slacks for verification.
class DiagnosticsRecorder final : public DiagnosticsHook {
 public:
  DiagnosticsRecorder(const ProblemInstance& instance,
                      const UpdateSchedule& schedule, const Stepsizes& steps,
                      const ConstantCatalog& catalog,
                      DiagnosticsOptions options);

  void on_initial(const RunState& state, TraceRow& row) override;
  void on_step(const RunState& prev, const RunState& next,
               TraceRow& row) override;

  double delta0() const { return delta0_; }
  double envelope_c() const { return envelope_c_; }
  /// min over k of (1 - rho) Delta^k - Delta^{k+1}; >= -tol means the
  /// contraction held everywhere it was evaluated.
  double min_contraction_slack() const { return min_contraction_; }
  double min_prop1_slack() const { return min_prop1_; }
  double min_prop2_slack() const { return min_prop2_; }
  /// max over k of (measured squared error - envelope); <= 0 means the
  /// envelope dominated the trajectory.
  double max_envelope_violation() const { return max_envelope_violation_; }
  long steps_evaluated() const { return steps_evaluated_; }

 private:
  const ProblemInstance& instance_;
  const UpdateSchedule& schedule_;
  const Stepsizes& steps_;
  const ConstantCatalog& catalog_;
  DiagnosticsOptions options_;
  MeritEvaluator eval_;
  Vector x_opt_stacked_;

  MeritReport prev_merit_;
  Vector prev_x_star_;
  bool has_prev_ = false;
  double delta0_ = 0.0;
  double envelope_c_ = 0.0;
  double min_contraction_ = std::numeric_limits<double>::infinity();
  double min_prop1_ = std::numeric_limits<double>::infinity();
  double min_prop2_ = std::numeric_limits<double>::infinity();
  double max_envelope_violation_ = -std::numeric_limits<double>::infinity();
  long steps_evaluated_ = 0;
};

}  // namespace dish
