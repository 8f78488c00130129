#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "dish/objectives.hpp"
#include "dish/schedule.hpp"
#include "dish/topology.hpp"
#include "dish/types.hpp"

namespace dish {

/// Stacked primal/dual iterate.
struct RunState {
  Vector x;       // R^{nd}
  Vector lambda;  // R^{nd}
  long k = 0;
};

/// Zero-initialized state (the default initialization).
RunState initial_state(const ProblemInstance& instance);

/// Local primal update matrix P_i: identity for gradient-type,
/// (H_i + mu I)^{-1} for Newton-type, (H_i + mu (1 - z_ii) I)^{-1} for the
/// ESOM-style diagonal penalty approximation. Positive definiteness is
/// checked for d <= 10.
Matrix primal_update_matrix(PrimalKind kind, const LocalObjective& objective,
                            const Vector& x_i, double mu, double z_ii);

/// Local dual update matrix Q_i: identity or H_i + mu I.
Matrix dual_update_matrix(DualKind kind, const LocalObjective& objective,
                          const Vector& x_i, double mu);

enum class Execution { Serial, OpenMP };
enum class EngineKind { Compact, Distributed };

/// Six (primal, dual) kind combinations; codes gg, gn, ng, nn, eg, en.
constexpr int kKindCombos = 6;
int kind_index(UpdateKind kind);
const char* kind_code(int index);

struct TraceRow {
  long k = 0;
  double rel_err = 0.0;
  double consensus_residual = std::numeric_limits<double>::quiet_NaN();
  double merit = std::numeric_limits<double>::quiet_NaN();
  double dual_gap = std::numeric_limits<double>::quiet_NaN();
  double primal_err = std::numeric_limits<double>::quiet_NaN();
  std::array<int, kKindCombos> kind_counts{};
  double prop1_slack = std::numeric_limits<double>::quiet_NaN();
  double prop2_slack = std::numeric_limits<double>::quiet_NaN();
  double envelope = std::numeric_limits<double>::quiet_NaN();
};

/// Per-iteration record of a run. rel_err is measured against the stacked
/// centralized optimum and normalized by the initial error; when the run
/// starts at the optimum the column holds absolute errors instead.
struct Trace {
  std::vector<TraceRow> rows;
  bool diverged = false;
  long diverged_at = -1;
  std::string message;
  bool absolute_error = false;
  double initial_error = 0.0;
  long iterations_to_target = -1;
  long total_iterations = 0;
  double final_rel_err = std::numeric_limits<double>::quiet_NaN();
  bool has_diagnostics = false;

  bool reached_target() const { return iterations_to_target >= 0; }
  /// Header "k,rel_err,consensus_residual,merit,dual_gap,primal_err,kinds",
  /// plus ",prop1_slack,prop2_slack,envelope" when diagnostics are attached.
  /// Floats are written with 17 significant digits.
  void write_csv(std::ostream& os) const;
};

/// Hook for theory-side metrics; see the analysis module for the recorder
/// that fills merit, proposition slacks, and the convergence envelope.
class DiagnosticsHook {
 public:
  virtual ~DiagnosticsHook() = default;
  virtual void on_initial(const RunState& state, TraceRow& row) = 0;
  virtual void on_step(const RunState& prev, const RunState& next,
                       TraceRow& row) = 0;
};

struct RunOptions {
  long max_iters = 5000;
  double target_rel_err = 1e-8;
  EngineKind engine = EngineKind::Compact;
  Execution exec = Execution::Serial;
  /// Record every trace_stride-th row (k=0 and the final row are always
  /// kept); 0 disables row recording.
  long trace_stride = 1;
  double divergence_threshold = 1e12;
  DiagnosticsHook* diagnostics = nullptr;
};

/// One simultaneous (Jacobi) update of x and lambda using iteration-k
/// values; update matrices are applied blockwise.
RunState step_compact(const RunState& state, const ProblemInstance& instance,
                      const UpdateSchedule& schedule, const Stepsizes& steps,
                      Execution exec = Execution::Serial);

/// Message-level engine: per-agent states and a synchronous round-based
/// neighbor exchange.
struct AgentState {
  Vector x;
  Vector lambda;
};
struct NeighborMessage {
  int from = -1;
  Vector x;
  Vector lambda;
};
/// mailbox[i] holds the messages agent i received this round, sorted by
/// sender; one (x, lambda) message per directed edge.
using Mailbox = std::vector<std::vector<NeighborMessage>>;

Mailbox exchange_messages(const std::vector<AgentState>& states,
                          const Graph& graph);
long message_count(const Mailbox& mailbox);

/// Computes each agent's update from its own state, its neighbors' messages,
/// and row i of Z; identical to step_compact in exact arithmetic. Throws
/// Error("protocol violation") if the mailbox does not carry exactly the
/// neighbor messages.
std::vector<AgentState> step_distributed(const std::vector<AgentState>& states,
                                         const Mailbox& mailbox,
                                         const ProblemInstance& instance,
                                         const UpdateSchedule& schedule,
                                         const Stepsizes& steps,
                                         long iteration);

std::vector<AgentState> split_state(const RunState& state, int n, int d);
RunState stack_states(const std::vector<AgentState>& states, long k);

/// Runs DISH until the relative-error target or max_iters; divergence (any
/// non-finite coordinate, or relative error above the threshold) stops the
/// run and is reported on the returned trace together with the partial rows.
Trace run(const ProblemInstance& instance, const UpdateSchedule& schedule,
          const Stepsizes& steps, const Vector& x0, const Vector& lambda0,
          const RunOptions& opts = {});

/// Same, from the zero initialization.
Trace run(const ProblemInstance& instance, const UpdateSchedule& schedule,
          const Stepsizes& steps, const RunOptions& opts = {});

}  // namespace dish
