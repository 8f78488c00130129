#include "dish/reference.hpp"

#include <cmath>

namespace dish::reference {

namespace {

// Local Kronecker assembly, kept separate from the library's blockwise path.
Matrix lift(const Matrix& zlike, int d) {
  const Eigen::Index n = zlike.rows();
  Matrix out = Matrix::Zero(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (zlike(i, j) != 0.0)
        out.block(i * d, j * d, d, d) = zlike(i, j) * Matrix::Identity(d, d);
  return out;
}

Matrix lifted_w(const ProblemInstance& instance) {
  const Matrix& Z = instance.topology.Z();
  const Matrix iz = Matrix::Identity(Z.rows(), Z.cols()) - Z;
  return lift(iz, instance.d());
}

}  // namespace

std::vector<RunState> arrow_hurwicz(const ProblemInstance& instance,
                                    const Vector& a, const Vector& b,
                                    double mu, Vector x0, Vector lambda0,
                                    int iterations) {
  const int n = instance.n();
  const int d = instance.d();
  const Matrix W = lifted_w(instance);
  Vector x = std::move(x0);
  Vector lambda = std::move(lambda0);
  std::vector<RunState> iterates;
  Vector grad;
  for (int k = 0; k < iterations; ++k) {
    instance.grad_f_stacked(x, grad);
    const Vector wx = W * x;
    const Vector gl = grad + W * lambda + mu * wx;
    Vector xn(x.size()), ln(lambda.size());
    for (int i = 0; i < n; ++i) {
      xn.segment(static_cast<Eigen::Index>(i) * d, d) =
          x.segment(static_cast<Eigen::Index>(i) * d, d) -
          a(i) * gl.segment(static_cast<Eigen::Index>(i) * d, d);
      ln.segment(static_cast<Eigen::Index>(i) * d, d) =
          lambda.segment(static_cast<Eigen::Index>(i) * d, d) +
          b(i) * wx.segment(static_cast<Eigen::Index>(i) * d, d);
    }
    x = std::move(xn);
    lambda = std::move(ln);
    iterates.push_back(RunState{x, lambda, k + 1});
  }
  return iterates;
}

std::vector<RunState> esom0(const ProblemInstance& instance, const Vector& a,
                            const Vector& b, double mu, Vector x0,
                            Vector lambda0, int iterations) {
  const int n = instance.n();
  const int d = instance.d();
  const Matrix W = lifted_w(instance);
  Vector x = std::move(x0);
  Vector lambda = std::move(lambda0);
  std::vector<RunState> iterates;
  Vector grad;
  Matrix hi(d, d);
  for (int k = 0; k < iterations; ++k) {
    instance.grad_f_stacked(x, grad);
    const Vector wx = W * x;
    const Vector gl = grad + W * lambda + mu * wx;
    Vector xn(x.size()), ln(lambda.size());
    for (int i = 0; i < n; ++i) {
      instance.objectives[static_cast<std::size_t>(i)]->hessian_into(
          x.segment(static_cast<Eigen::Index>(i) * d, d), hi);
      const double zii = instance.topology.Z()(i, i);
      const Matrix p =
          (hi + mu * (1.0 - zii) * Matrix::Identity(d, d)).inverse();
      xn.segment(static_cast<Eigen::Index>(i) * d, d) =
          x.segment(static_cast<Eigen::Index>(i) * d, d) -
          a(i) * (p * gl.segment(static_cast<Eigen::Index>(i) * d, d));
      ln.segment(static_cast<Eigen::Index>(i) * d, d) =
          lambda.segment(static_cast<Eigen::Index>(i) * d, d) +
          b(i) * wx.segment(static_cast<Eigen::Index>(i) * d, d);
    }
    x = std::move(xn);
    lambda = std::move(ln);
    iterates.push_back(RunState{x, lambda, k + 1});
  }
  return iterates;
}

}  // namespace dish::reference

namespace dish {

Trace run_extra(const ProblemInstance& instance, double alpha, const Vector& x0,
                const RunOptions& opts) {
  const Eigen::Index nd =
      static_cast<Eigen::Index>(instance.n()) * instance.d();
  if (x0.size() != nd) throw Error("state dimension mismatch");
  if (!(alpha > 0.0)) throw Error("stepsizes must be positive");

  const Matrix& Z = instance.topology.Z();
  const Matrix mixing = reference::lift(Z, instance.d());
  const Matrix mixing_tilde = reference::lift(
      0.5 * (Matrix::Identity(Z.rows(), Z.cols()) + Z), instance.d());
  const Matrix W = reference::lifted_w(instance);

  const Vector x_target = instance.x_opt_stacked();
  Trace trace;
  trace.initial_error = (x0 - x_target).norm();
  trace.absolute_error = trace.initial_error <= 0.0;
  const double denom = trace.absolute_error ? 1.0 : trace.initial_error;

  auto push_row = [&](long k, const Vector& x, double rel) {
    TraceRow row;
    row.k = k;
    row.rel_err = rel;
    row.consensus_residual = (W * x).norm();
    trace.rows.push_back(row);
  };

  Vector x_prev = x0;
  Vector grad_prev;
  instance.grad_f_stacked(x_prev, grad_prev);
  const double rel0 = (x_prev - x_target).norm() / denom;
  trace.final_rel_err = rel0;
  push_row(0, x_prev, rel0);
  if (rel0 <= opts.target_rel_err) {
    trace.iterations_to_target = 0;
    return trace;
  }

  Vector x_cur = mixing * x_prev - alpha * grad_prev;
  Vector grad_cur(nd);
  for (long k = 1; k <= opts.max_iters; ++k) {
    const bool finite = x_cur.allFinite();
    const double rel = finite ? (x_cur - x_target).norm() / denom
                              : std::numeric_limits<double>::quiet_NaN();
    trace.final_rel_err = rel;
    trace.total_iterations = k;
    if (!finite || rel > opts.divergence_threshold) {
      trace.diverged = true;
      trace.diverged_at = k;
      trace.message = "divergence at iteration " + std::to_string(k);
      push_row(k, x_cur, rel);
      return trace;
    }
    const bool hit = rel <= opts.target_rel_err;
    const bool last = hit || k == opts.max_iters;
    if (last || (opts.trace_stride > 0 && k % opts.trace_stride == 0))
      push_row(k, x_cur, rel);
    if (hit) {
      trace.iterations_to_target = k;
      return trace;
    }
    instance.grad_f_stacked(x_cur, grad_cur);
    Vector x_next = (x_cur + mixing * x_cur) - mixing_tilde * x_prev -
                    alpha * (grad_cur - grad_prev);
    x_prev = std::move(x_cur);
    x_cur = std::move(x_next);
    grad_prev = grad_cur;
  }
  return trace;
}

Trace run_extra(const ProblemInstance& instance, double alpha,
                const RunOptions& opts) {
  const Eigen::Index nd =
      static_cast<Eigen::Index>(instance.n()) * instance.d();
  return run_extra(instance, alpha, Vector::Zero(nd), opts);
}

}  // namespace dish
