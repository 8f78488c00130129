#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dish/types.hpp"

namespace dish {

enum class PrimalKind : std::uint8_t { Gradient = 0, Newton = 1, Esom = 2 };
enum class DualKind : std::uint8_t { Gradient = 0, Newton = 1 };

struct UpdateKind {
  PrimalKind primal = PrimalKind::Gradient;
  DualKind dual = DualKind::Gradient;
  bool operator==(const UpdateKind&) const = default;
};

inline constexpr UpdateKind kGradientUpdate{PrimalKind::Gradient,
                                            DualKind::Gradient};
inline constexpr UpdateKind kNewtonUpdate{PrimalKind::Newton, DualKind::Newton};
inline constexpr UpdateKind kEsomUpdate{PrimalKind::Esom, DualKind::Gradient};

/// Per-agent, per-iteration choice of update matrices. Deterministic given
/// the construction parameters: switching schedules fix each agent's period
/// and initial kind at construction from the seed.
class UpdateSchedule {
 public:
  static UpdateSchedule constant(int n_agents, UpdateKind kind);
  static UpdateSchedule per_agent(std::vector<UpdateKind> kinds);
  /// First `newton_agents` agents always Newton-type, the rest gradient-type.
  static UpdateSchedule dish_k(int n_agents, int newton_agents);
  /// Each agent flips between gradient- and Newton-type every t_i iterations
  /// with t_i drawn uniformly from {lo, ..., hi} and a seeded initial kind.
  static UpdateSchedule switching_uniform(int n_agents, int lo, int hi,
                                          std::uint64_t seed);
  /// Periods t_i = round(exp(N(log_mean, log_var)) + shift). Set
  /// `var_is_stddev` to interpret the second parameter as a standard
  /// deviation instead of a variance.
  static UpdateSchedule switching_lognormal(int n_agents, double log_mean,
                                            double log_var, double shift,
                                            std::uint64_t seed,
                                            bool var_is_stddev = false);

  UpdateKind kind(int agent, long iteration) const {
    const auto& p = plans_[static_cast<std::size_t>(agent)];
    if (p.period <= 0) return p.base;
    return ((iteration / p.period) % 2 == 0) ? p.base : flipped(p.base);
  }

  int agents() const { return static_cast<int>(plans_.size()); }
  bool switching() const;
  /// Kinds agent i can take over any run (one entry, or two when switching).
  std::vector<UpdateKind> possible_kinds(int agent) const;
  /// True if some agent takes a gradient-type primal step at some iteration.
  bool any_gradient_primal() const;
  std::string describe() const;

 private:
  struct AgentPlan {
    UpdateKind base;
    long period = 0;  // 0: constant
  };
  static UpdateKind flipped(UpdateKind k) {
    return k == kNewtonUpdate ? kGradientUpdate : kNewtonUpdate;
  }
  std::vector<AgentPlan> plans_;
};

/// Personalized stepsizes and the augmentation penalty. When
/// `unit_newton_primal` is set, a_i is replaced by 1 on iterations where
/// agent i takes a Newton-type primal step.
struct Stepsizes {
  Vector a;
  Vector b;
  double mu = 0.0;
  bool unit_newton_primal = false;

  static Stepsizes uniform(int n, double a, double b, double mu = 0.0);

  double primal_step(int i, PrimalKind kind) const {
    return (unit_newton_primal && kind != PrimalKind::Gradient) ? 1.0 : a(i);
  }
  void validate(int n) const;
};

}  // namespace dish
