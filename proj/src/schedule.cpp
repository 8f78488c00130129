#include "dish/schedule.hpp"

#include <cmath>
#include <sstream>

#include "dish/rng.hpp"

namespace dish {

UpdateSchedule UpdateSchedule::constant(int n_agents, UpdateKind kind) {
  if (n_agents < 1) throw Error("schedule needs at least one agent");
  UpdateSchedule s;
  s.plans_.assign(static_cast<std::size_t>(n_agents), AgentPlan{kind, 0});
  return s;
}

UpdateSchedule UpdateSchedule::per_agent(std::vector<UpdateKind> kinds) {
  if (kinds.empty()) throw Error("schedule needs at least one agent");
  UpdateSchedule s;
  for (const auto& k : kinds) s.plans_.push_back(AgentPlan{k, 0});
  return s;
}

UpdateSchedule UpdateSchedule::dish_k(int n_agents, int newton_agents) {
  if (n_agents < 1) throw Error("schedule needs at least one agent");
  if (newton_agents < 0 || newton_agents > n_agents)
    throw Error("dish_k: K out of range");
  UpdateSchedule s;
  for (int i = 0; i < n_agents; ++i)
    s.plans_.push_back(
        AgentPlan{i < newton_agents ? kNewtonUpdate : kGradientUpdate, 0});
  return s;
}

UpdateSchedule UpdateSchedule::switching_uniform(int n_agents, int lo, int hi,
                                                 std::uint64_t seed) {
  if (n_agents < 1) throw Error("schedule needs at least one agent");
  if (lo < 1 || hi < lo) throw Error("switching: bad period range");
  Rng rng(seed);
  UpdateSchedule s;
  for (int i = 0; i < n_agents; ++i) {
    const long t = rng.uniform_int(lo, hi);
    const UpdateKind init =
        rng.bernoulli(0.5) ? kNewtonUpdate : kGradientUpdate;
    s.plans_.push_back(AgentPlan{init, t});
  }
  return s;
}

UpdateSchedule UpdateSchedule::switching_lognormal(int n_agents,
                                                   double log_mean,
                                                   double log_var, double shift,
                                                   std::uint64_t seed,
                                                   bool var_is_stddev) {
  if (n_agents < 1) throw Error("schedule needs at least one agent");
  const double sd = var_is_stddev ? log_var : std::sqrt(log_var);
  Rng rng(seed);
  UpdateSchedule s;
  for (int i = 0; i < n_agents; ++i) {
    const double t = std::exp(log_mean + sd * rng.normal()) + shift;
    const long period = std::max(1L, std::lround(t));
    const UpdateKind init =
        rng.bernoulli(0.5) ? kNewtonUpdate : kGradientUpdate;
    s.plans_.push_back(AgentPlan{init, period});
  }
  return s;
}

bool UpdateSchedule::switching() const {
  for (const auto& p : plans_)
    if (p.period > 0) return true;
  return false;
}

std::vector<UpdateKind> UpdateSchedule::possible_kinds(int agent) const {
  const auto& p = plans_[static_cast<std::size_t>(agent)];
  if (p.period <= 0) return {p.base};
  return {p.base, flipped(p.base)};
}

bool UpdateSchedule::any_gradient_primal() const {
  for (int i = 0; i < agents(); ++i)
    for (const auto& k : possible_kinds(i))
      if (k.primal == PrimalKind::Gradient) return true;
  return false;
}

std::string UpdateSchedule::describe() const {
  auto code = [](UpdateKind k) {
    std::string s;
    s += k.primal == PrimalKind::Gradient  ? 'g'
         : k.primal == PrimalKind::Newton ? 'n'
                                          : 'e';
    s += k.dual == DualKind::Gradient ? 'g' : 'n';
    return s;
  };
  std::ostringstream os;
  for (std::size_t i = 0; i < plans_.size(); ++i) {
    if (i) os << ",";
    os << code(plans_[i].base);
    if (plans_[i].period > 0) os << "/" << plans_[i].period;
  }
  return os.str();
}

Stepsizes Stepsizes::uniform(int n, double a, double b, double mu) {
  Stepsizes s;
  s.a = Vector::Constant(n, a);
  s.b = Vector::Constant(n, b);
  s.mu = mu;
  return s;
}

void Stepsizes::validate(int n) const {
  if (a.size() != n || b.size() != n) throw Error("stepsizes: size mismatch");
  if ((a.array() <= 0.0).any() || (b.array() <= 0.0).any())
    throw Error("stepsizes must be positive");
  if (!(mu >= 0.0) || !std::isfinite(mu))
    throw Error("augmentation penalty must be finite and nonnegative");
}

}  // namespace dish
