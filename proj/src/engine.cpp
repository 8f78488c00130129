#include "dish/engine.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace dish {

namespace {

constexpr std::array<const char*, kKindCombos> kKindCodes = {
    "gg", "gn", "ng", "nn", "eg", "en"};

void format_double(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

void check_spd(const Matrix& m, int d) {
  if (d > 10) return;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw Error("update matrix not positive definite");
}

std::array<int, kKindCombos> kind_histogram(const UpdateSchedule& schedule,
                                            long k) {
  std::array<int, kKindCombos> counts{};
  for (int i = 0; i < schedule.agents(); ++i)
    ++counts[static_cast<std::size_t>(kind_index(schedule.kind(i, k)))];
  return counts;
}

// Per-agent update kernel shared by the serial and OpenMP paths. All
// per-agent Cholesky factors for constant Hessians are built eagerly so the
// hot loop is const and safe to run from multiple threads.
class StepKernel {
 public:
  StepKernel(const ProblemInstance& instance, const UpdateSchedule& schedule,
             const Stepsizes& steps)
      : instance_(instance),
        cm_(instance.topology),
        schedule_(schedule),
        steps_(steps),
        n_(instance.n()),
        d_(instance.d()) {
    agents_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      auto& a = agents_[static_cast<std::size_t>(i)];
      a.obj = instance.objectives[static_cast<std::size_t>(i)].get();
      a.zii = cm_.self_weight(i);
      a.const_hessian = a.obj->constant_hessian();
      if (a.const_hessian) {
        Matrix h(d_, d_);
        a.obj->hessian_into(Vector::Zero(d_), h);
        a.hess = h;
        a.newton_llt.compute(h + steps.mu * Matrix::Identity(d_, d_));
        a.esom_llt.compute(h +
                           steps.mu * (1.0 - a.zii) * Matrix::Identity(d_, d_));
      }
    }
    const int max_threads = std::max(1, omp_get_max_threads());
    ws_.resize(static_cast<std::size_t>(max_threads));
    for (auto& w : ws_) {
      w.cons_x.resize(d_);
      w.cons_l.resize(d_);
      w.rhs.resize(d_);
      w.dir.resize(d_);
      w.h.resize(d_, d_);
      w.shifted.resize(d_, d_);
    }
  }

  // One Jacobi step: reads (x, lam) at iteration k, writes (xn, ln).
  void apply(const Vector& x, const Vector& lam, long k, Vector& xn,
             Vector& ln, bool parallel) {
    if (parallel) {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n_; ++i)
        update_agent(i, k, x, lam, xn, ln,
                     ws_[static_cast<std::size_t>(omp_get_thread_num())]);
    } else {
      for (int i = 0; i < n_; ++i) update_agent(i, k, x, lam, xn, ln, ws_[0]);
    }
  }

 private:
  struct AgentCache {
    const LocalObjective* obj = nullptr;
    double zii = 0.0;
    bool const_hessian = false;
    Matrix hess;
    Eigen::LLT<Matrix> newton_llt;  // H + mu I
    Eigen::LLT<Matrix> esom_llt;    // H + mu (1 - zii) I
  };
  struct Workspace {
    Vector cons_x, cons_l, rhs, dir;
    Matrix h, shifted;
  };

  void update_agent(int i, long k, const Vector& x, const Vector& lam,
                    Vector& xn, Vector& ln, Workspace& w) const {
    const auto& a = agents_[static_cast<std::size_t>(i)];
    const auto xi = x.segment(static_cast<Eigen::Index>(i) * d_, d_);
    const auto li = lam.segment(static_cast<Eigen::Index>(i) * d_, d_);

    w.cons_x = (1.0 - a.zii) * xi;
    w.cons_l = (1.0 - a.zii) * li;
    for (const auto& [j, zij] : cm_.neighbors(i)) {
      w.cons_x.noalias() -= zij * x.segment(static_cast<Eigen::Index>(j) * d_, d_);
      w.cons_l.noalias() -=
          zij * lam.segment(static_cast<Eigen::Index>(j) * d_, d_);
    }

    const UpdateKind kind = schedule_.kind(i, k);
    const bool need_hessian = kind.primal != PrimalKind::Gradient ||
                              kind.dual == DualKind::Newton;
    if (need_hessian && !a.const_hessian) a.obj->hessian_into(xi, w.h);

    a.obj->gradient_into(xi, w.rhs);
    w.rhs += w.cons_l;
    w.rhs.noalias() += steps_.mu * w.cons_x;

    switch (kind.primal) {
      case PrimalKind::Gradient:
        w.dir = w.rhs;
        break;
      case PrimalKind::Newton:
        if (a.const_hessian) {
          w.dir = w.rhs;
          a.newton_llt.solveInPlace(w.dir);
        } else {
          w.shifted = w.h;
          w.shifted.diagonal().array() += steps_.mu;
          w.dir = w.shifted.llt().solve(w.rhs);
        }
        break;
      case PrimalKind::Esom:
        if (a.const_hessian) {
          w.dir = w.rhs;
          a.esom_llt.solveInPlace(w.dir);
        } else {
          w.shifted = w.h;
          w.shifted.diagonal().array() += steps_.mu * (1.0 - a.zii);
          w.dir = w.shifted.llt().solve(w.rhs);
        }
        break;
    }
    xn.segment(static_cast<Eigen::Index>(i) * d_, d_) =
        xi - steps_.primal_step(i, kind.primal) * w.dir;

    auto lni = ln.segment(static_cast<Eigen::Index>(i) * d_, d_);
    if (kind.dual == DualKind::Gradient) {
      lni = li + steps_.b(i) * w.cons_x;
    } else if (a.const_hessian) {
      lni = li + steps_.b(i) * (a.hess * w.cons_x +
                                steps_.mu * w.cons_x);
    } else {
      lni = li + steps_.b(i) * (w.h * w.cons_x + steps_.mu * w.cons_x);
    }
  }

  const ProblemInstance& instance_;
  const ConsensusMatrix& cm_;
  const UpdateSchedule& schedule_;
  const Stepsizes& steps_;
  int n_;
  int d_;
  std::vector<AgentCache> agents_;
  std::vector<Workspace> ws_;
};

}  // namespace

int kind_index(UpdateKind kind) {
  return static_cast<int>(kind.primal) * 2 + static_cast<int>(kind.dual);
}

const char* kind_code(int index) {
  return kKindCodes[static_cast<std::size_t>(index)];
}

RunState initial_state(const ProblemInstance& instance) {
  const Eigen::Index nd =
      static_cast<Eigen::Index>(instance.n()) * instance.d();
  return RunState{Vector::Zero(nd), Vector::Zero(nd), 0};
}

Matrix primal_update_matrix(PrimalKind kind, const LocalObjective& objective,
                            const Vector& x_i, double mu, double z_ii) {
  const int d = objective.dim();
  switch (kind) {
    case PrimalKind::Gradient:
      return Matrix::Identity(d, d);
    case PrimalKind::Newton: {
      Matrix h = objective.hessian(x_i);
      h.diagonal().array() += mu;
      check_spd(h, d);
      Matrix p = h.llt().solve(Matrix::Identity(d, d));
      return p;
    }
    case PrimalKind::Esom: {
      Matrix h = objective.hessian(x_i);
      h.diagonal().array() += mu * (1.0 - z_ii);
      check_spd(h, d);
      Matrix p = h.llt().solve(Matrix::Identity(d, d));
      return p;
    }
  }
  throw Error("unknown primal kind");
}

Matrix dual_update_matrix(DualKind kind, const LocalObjective& objective,
                          const Vector& x_i, double mu) {
  const int d = objective.dim();
  if (kind == DualKind::Gradient) return Matrix::Identity(d, d);
  Matrix q = objective.hessian(x_i);
  q.diagonal().array() += mu;
  check_spd(q, d);
  return q;
}

RunState step_compact(const RunState& state, const ProblemInstance& instance,
                      const UpdateSchedule& schedule, const Stepsizes& steps,
                      Execution exec) {
  const Eigen::Index nd =
      static_cast<Eigen::Index>(instance.n()) * instance.d();
  if (state.x.size() != nd || state.lambda.size() != nd)
    throw Error("state dimension mismatch");
  steps.validate(instance.n());
  StepKernel kernel(instance, schedule, steps);
  RunState next{Vector(nd), Vector(nd), state.k + 1};
  kernel.apply(state.x, state.lambda, state.k, next.x, next.lambda,
               exec == Execution::OpenMP);
  if (!next.x.allFinite() || !next.lambda.allFinite())
    throw Error("divergence at iteration " + std::to_string(next.k));
  return next;
}

Mailbox exchange_messages(const std::vector<AgentState>& states,
                          const Graph& graph) {
  Mailbox mailbox(states.size());
  for (const auto& [i, j] : graph.edges) {
    mailbox[static_cast<std::size_t>(j)].push_back(
        NeighborMessage{i, states[static_cast<std::size_t>(i)].x,
                        states[static_cast<std::size_t>(i)].lambda});
    mailbox[static_cast<std::size_t>(i)].push_back(
        NeighborMessage{j, states[static_cast<std::size_t>(j)].x,
                        states[static_cast<std::size_t>(j)].lambda});
  }
  for (auto& inbox : mailbox)
    std::sort(inbox.begin(), inbox.end(),
              [](const NeighborMessage& a, const NeighborMessage& b) {
                return a.from < b.from;
              });
  return mailbox;
}

long message_count(const Mailbox& mailbox) {
  long total = 0;
  for (const auto& inbox : mailbox)
    total += static_cast<long>(inbox.size());
  return total;
}

std::vector<AgentState> step_distributed(const std::vector<AgentState>& states,
                                         const Mailbox& mailbox,
                                         const ProblemInstance& instance,
                                         const UpdateSchedule& schedule,
                                         const Stepsizes& steps,
                                         long iteration) {
  const int n = instance.n();
  const int d = instance.d();
  if (static_cast<int>(states.size()) != n ||
      static_cast<int>(mailbox.size()) != n)
    throw Error("state dimension mismatch");
  steps.validate(n);
  const ConsensusMatrix& cm = instance.topology;

  std::vector<AgentState> next(states.size());
  Vector cons_x(d), cons_l(d), rhs(d), dir(d);
  Matrix h(d, d), shifted(d, d);
  for (int i = 0; i < n; ++i) {
    const auto& nbrs = cm.neighbors(i);
    const auto& inbox = mailbox[static_cast<std::size_t>(i)];
    if (inbox.size() != nbrs.size()) throw Error("protocol violation");

    const auto& self = states[static_cast<std::size_t>(i)];
    const double zii = cm.self_weight(i);
    cons_x = (1.0 - zii) * self.x;
    cons_l = (1.0 - zii) * self.lambda;
    for (std::size_t m = 0; m < nbrs.size(); ++m) {
      if (inbox[m].from != nbrs[m].first) throw Error("protocol violation");
      const double zij = nbrs[m].second;
      cons_x.noalias() -= zij * inbox[m].x;
      cons_l.noalias() -= zij * inbox[m].lambda;
    }

    const LocalObjective& obj =
        *instance.objectives[static_cast<std::size_t>(i)];
    const UpdateKind kind = schedule.kind(i, iteration);
    const bool need_hessian = kind.primal != PrimalKind::Gradient ||
                              kind.dual == DualKind::Newton;
    if (need_hessian) obj.hessian_into(self.x, h);

    obj.gradient_into(self.x, rhs);
    rhs += cons_l;
    rhs.noalias() += steps.mu * cons_x;

    switch (kind.primal) {
      case PrimalKind::Gradient:
        dir = rhs;
        break;
      case PrimalKind::Newton:
        shifted = h;
        shifted.diagonal().array() += steps.mu;
        dir = shifted.llt().solve(rhs);
        break;
      case PrimalKind::Esom:
        shifted = h;
        shifted.diagonal().array() += steps.mu * (1.0 - zii);
        dir = shifted.llt().solve(rhs);
        break;
    }
    auto& out = next[static_cast<std::size_t>(i)];
    out.x = self.x - steps.primal_step(i, kind.primal) * dir;
    if (kind.dual == DualKind::Gradient)
      out.lambda = self.lambda + steps.b(i) * cons_x;
    else
      out.lambda = self.lambda + steps.b(i) * (h * cons_x + steps.mu * cons_x);
  }
  return next;
}

std::vector<AgentState> split_state(const RunState& state, int n, int d) {
  std::vector<AgentState> states(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    states[static_cast<std::size_t>(i)].x =
        state.x.segment(static_cast<Eigen::Index>(i) * d, d);
    states[static_cast<std::size_t>(i)].lambda =
        state.lambda.segment(static_cast<Eigen::Index>(i) * d, d);
  }
  return states;
}

RunState stack_states(const std::vector<AgentState>& states, long k) {
  const int n = static_cast<int>(states.size());
  const int d = static_cast<int>(states.front().x.size());
  RunState s{Vector(static_cast<Eigen::Index>(n) * d),
             Vector(static_cast<Eigen::Index>(n) * d), k};
  for (int i = 0; i < n; ++i) {
    s.x.segment(static_cast<Eigen::Index>(i) * d, d) =
        states[static_cast<std::size_t>(i)].x;
    s.lambda.segment(static_cast<Eigen::Index>(i) * d, d) =
        states[static_cast<std::size_t>(i)].lambda;
  }
  return s;
}

void Trace::write_csv(std::ostream& os) const {
  os << "k,rel_err,consensus_residual,merit,dual_gap,primal_err,kinds";
  if (has_diagnostics) os << ",prop1_slack,prop2_slack,envelope";
  os << "\n";
  for (const auto& row : rows) {
    os << row.k << ",";
    format_double(os, row.rel_err);
    os << ",";
    format_double(os, row.consensus_residual);
    os << ",";
    format_double(os, row.merit);
    os << ",";
    format_double(os, row.dual_gap);
    os << ",";
    format_double(os, row.primal_err);
    os << ",";
    bool first = true;
    for (int c = 0; c < kKindCombos; ++c) {
      if (row.kind_counts[static_cast<std::size_t>(c)] == 0) continue;
      if (!first) os << "|";
      os << kind_code(c) << ":" << row.kind_counts[static_cast<std::size_t>(c)];
      first = false;
    }
    if (has_diagnostics) {
      os << ",";
      format_double(os, row.prop1_slack);
      os << ",";
      format_double(os, row.prop2_slack);
      os << ",";
      format_double(os, row.envelope);
    }
    os << "\n";
  }
}

namespace {

Trace run_impl(const ProblemInstance& instance, const UpdateSchedule& schedule,
               const Stepsizes& steps, const Vector& x0, const Vector& lambda0,
               const RunOptions& opts) {
  const int n = instance.n();
  const int d = instance.d();
  const Eigen::Index nd = static_cast<Eigen::Index>(n) * d;
  if (x0.size() != nd || lambda0.size() != nd)
    throw Error("state dimension mismatch");
  if (opts.max_iters < 1) throw Error("max_iters must be at least 1");
  steps.validate(n);
  if (schedule.agents() != n) throw Error("schedule size mismatch");

  const Vector x_target = instance.x_opt_stacked();
  Trace trace;
  trace.initial_error = (x0 - x_target).norm();
  trace.absolute_error = trace.initial_error <= 0.0;
  const double denom = trace.absolute_error ? 1.0 : trace.initial_error;
  trace.has_diagnostics = opts.diagnostics != nullptr;

  RunState cur{x0, lambda0, 0};
  RunState next{Vector(nd), Vector(nd), 0};

  auto make_row = [&](const RunState& s, double rel, bool with_residual) {
    TraceRow row;
    row.k = s.k;
    row.rel_err = rel;
    if (with_residual)
      row.consensus_residual = instance.topology.apply_W(s.x).norm();
    row.kind_counts = kind_histogram(schedule, s.k);
    return row;
  };

  const double rel0 = (cur.x - x_target).norm() / denom;
  TraceRow row0 = make_row(cur, rel0, true);
  if (opts.diagnostics) opts.diagnostics->on_initial(cur, row0);
  trace.rows.push_back(row0);
  trace.final_rel_err = rel0;
  if (rel0 <= opts.target_rel_err) {
    trace.iterations_to_target = 0;
    return trace;
  }

  StepKernel kernel(instance, schedule, steps);
  const bool parallel = opts.exec == Execution::OpenMP;
  std::vector<AgentState> agent_states;
  if (opts.engine == EngineKind::Distributed)
    agent_states = split_state(cur, n, d);

  for (long k = 0; k < opts.max_iters; ++k) {
    if (opts.engine == EngineKind::Compact) {
      kernel.apply(cur.x, cur.lambda, k, next.x, next.lambda, parallel);
      next.k = k + 1;
    } else {
      Mailbox mailbox = exchange_messages(agent_states, instance.topology.graph());
      agent_states = step_distributed(agent_states, mailbox, instance, schedule,
                                      steps, k);
      next = stack_states(agent_states, k + 1);
    }

    const bool finite = next.x.allFinite() && next.lambda.allFinite();
    const double rel = finite ? (next.x - x_target).norm() / denom
                              : std::numeric_limits<double>::quiet_NaN();
    trace.final_rel_err = rel;
    trace.total_iterations = k + 1;

    if (!finite || rel > opts.divergence_threshold) {
      trace.diverged = true;
      trace.diverged_at = k + 1;
      trace.message = "divergence at iteration " + std::to_string(k + 1);
      TraceRow row = make_row(next, rel, finite);
      if (opts.diagnostics) opts.diagnostics->on_step(cur, next, row);
      trace.rows.push_back(row);
      return trace;
    }

    const bool hit_target = rel <= opts.target_rel_err;
    const bool last = hit_target || k + 1 == opts.max_iters;
    const bool record =
        last || (opts.trace_stride > 0 && (k + 1) % opts.trace_stride == 0);

    TraceRow row = make_row(next, rel, record);
    if (opts.diagnostics) opts.diagnostics->on_step(cur, next, row);
    if (record) trace.rows.push_back(row);

    std::swap(cur, next);
    if (hit_target) {
      trace.iterations_to_target = k + 1;
      break;
    }
  }
  return trace;
}

}  // namespace

Trace run(const ProblemInstance& instance, const UpdateSchedule& schedule,
          const Stepsizes& steps, const Vector& x0, const Vector& lambda0,
          const RunOptions& opts) {
  return run_impl(instance, schedule, steps, x0, lambda0, opts);
}

Trace run(const ProblemInstance& instance, const UpdateSchedule& schedule,
          const Stepsizes& steps, const RunOptions& opts) {
  const RunState s0 = initial_state(instance);
  return run_impl(instance, schedule, steps, s0.x, s0.lambda, opts);
}

}  // namespace dish
