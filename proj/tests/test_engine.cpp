#include <doctest.h>

#include <sstream>

#include "dish/engine.hpp"
#include "dish/rng.hpp"
#include "dish/verify.hpp"

using namespace dish;

namespace {

Vector random_vector(Rng& rng, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = rng.normal();
  return v;
}

ProblemInstance k2_toy() {
  const Graph k2 = Graph::from_edges(2, {{0, 1}});
  Matrix Z(2, 2);
  Z << 0.5, 0.5, 0.5, 0.5;
  std::vector<Vector> centers{Vector(2), Vector(2)};
  centers[0] << 1.0, -2.0;
  centers[1] << 3.0, 0.5;
  return make_quadratic_toy(centers, ConsensusMatrix::custom(k2, Z, 2));
}

ProblemInstance ring_toy() {
  Graph g = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  Rng rng(42);
  std::vector<Vector> centers;
  for (int i = 0; i < 5; ++i) centers.push_back(random_vector(rng, 2));
  return make_quadratic_toy(centers, ConsensusMatrix::degree_weights(g, 2));
}

}  // namespace

TEST_CASE("primal update matrices") {
  const ProblemInstance inst = k2_toy();
  const LocalObjective& obj = *inst.objectives[0];
  const Vector x = Vector::Zero(2);

  const Matrix grad_p = primal_update_matrix(PrimalKind::Gradient, obj, x, 1.0, 0.5);
  CHECK((grad_p - Matrix::Identity(2, 2)).norm() == 0.0);

  // unit Hessian, mu = 1: Newton-type matrix is (I + I)^{-1} = I/2
  const Matrix newton_p = primal_update_matrix(PrimalKind::Newton, obj, x, 1.0, 0.5);
  CHECK((newton_p - 0.5 * Matrix::Identity(2, 2)).norm() <= 1e-14);

  // mu = 0: Newton and ESOM coincide at the plain inverse Hessian
  const Matrix n0 = primal_update_matrix(PrimalKind::Newton, obj, x, 0.0, 0.5);
  const Matrix e0 = primal_update_matrix(PrimalKind::Esom, obj, x, 0.0, 0.5);
  CHECK((n0 - e0).norm() == 0.0);
  CHECK((n0 - Matrix::Identity(2, 2)).norm() <= 1e-14);

  // ESOM uses the diagonally weighted penalty mu (1 - z_ii)
  const Matrix e1 = primal_update_matrix(PrimalKind::Esom, obj, x, 2.0, 0.25);
  CHECK((e1 - (1.0 / 2.5) * Matrix::Identity(2, 2)).norm() <= 1e-14);
}

TEST_CASE("dual update matrices") {
  const ProblemInstance toy = k2_toy();
  const Vector x = Vector::Zero(2);
  CHECK((dual_update_matrix(DualKind::Gradient, *toy.objectives[0], x, 3.0) -
         Matrix::Identity(2, 2))
            .norm() == 0.0);
  // unit Hessian, mu = 0
  CHECK((dual_update_matrix(DualKind::Newton, *toy.objectives[0], x, 0.0) -
         Matrix::Identity(2, 2))
            .norm() <= 1e-14);

  // least-squares agents have constant dual matrices across iterations
  const ProblemInstance ls =
      make_least_squares(3, 1.0, 2, 8, 1.0, Vector::Ones(2), 13);
  Rng rng(3);
  const Vector x0 = random_vector(rng, 2);
  const Vector x50 = random_vector(rng, 2);
  const Matrix q0 = dual_update_matrix(DualKind::Newton, *ls.objectives[1], x0, 0.7);
  const Matrix q50 = dual_update_matrix(DualKind::Newton, *ls.objectives[1], x50, 0.7);
  CHECK((q0 - q50).norm() == 0.0);
}

TEST_CASE("one DISH-G step from zero moves each agent to a_i c_i") {
  const ProblemInstance inst = k2_toy();
  const UpdateSchedule sched = UpdateSchedule::constant(2, kGradientUpdate);
  Stepsizes steps = Stepsizes::uniform(2, 0.25, 0.1, 0.8);
  steps.a(1) = 0.5;  // personalized stepsizes
  const RunState s0 = initial_state(inst);
  const RunState s1 = step_compact(s0, inst, sched, steps);
  // grad f_i(0) = -c_i and both W-terms vanish at zero states
  const auto* q0 = dynamic_cast<const QuadraticObjective*>(inst.objectives[0].get());
  const auto* q1 = dynamic_cast<const QuadraticObjective*>(inst.objectives[1].get());
  CHECK((s1.x.segment(0, 2) - 0.25 * q0->center()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s1.x.segment(2, 2) - 0.5 * q1->center()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s1.lambda.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s1.k == 1);
}

TEST_CASE("stationary point is a fixed point for every schedule") {
  const ProblemInstance inst = ring_toy();
  const Vector x_star = inst.x_opt_stacked();
  const Vector lambda_star = stationary_multiplier(inst);
  for (double mu : {0.0, 1.3}) {
    for (const auto& sched :
         {UpdateSchedule::constant(5, kGradientUpdate),
          UpdateSchedule::constant(5, kNewtonUpdate),
          UpdateSchedule::constant(5, kEsomUpdate),
          UpdateSchedule::dish_k(5, 3),
          UpdateSchedule::switching_uniform(5, 5, 50, 4)}) {
      const Stepsizes steps = Stepsizes::uniform(5, 0.4, 0.2, mu);
      const RunState next =
          step_compact(RunState{x_star, lambda_star, 0}, inst, sched, steps);
      CHECK((next.x - x_star).cwiseAbs().maxCoeff() <= 1e-13);
      CHECK((next.lambda - lambda_star).cwiseAbs().maxCoeff() <= 1e-13);
    }
  }
}

TEST_CASE("compact and distributed engines agree per coordinate") {
  // one-step agreement across 50 random configurations
  Rng rng(19);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 3 + static_cast<int>(rng.uniform_int(0, 4));
    const int d = 1 + static_cast<int>(rng.uniform_int(0, 2));
    const Graph g =
        erdos_renyi(n, 0.7, static_cast<std::uint64_t>(500 + rep));
    std::vector<Vector> centers;
    for (int i = 0; i < n; ++i) centers.push_back(random_vector(rng, d));
    const ProblemInstance inst =
        make_quadratic_toy(centers, ConsensusMatrix::degree_weights(g, d));
    std::vector<UpdateKind> kinds;
    for (int i = 0; i < n; ++i)
      kinds.push_back(UpdateKind{
          static_cast<PrimalKind>(rng.uniform_int(0, 2)),
          static_cast<DualKind>(rng.uniform_int(0, 1))});
    const UpdateSchedule sched = UpdateSchedule::per_agent(kinds);
    const Stepsizes steps = Stepsizes::uniform(
        n, 0.1 + rng.uniform(), 0.05 + 0.2 * rng.uniform(), rng.uniform());
    const RunState s0{random_vector(rng, static_cast<Eigen::Index>(n) * d),
                      random_vector(rng, static_cast<Eigen::Index>(n) * d), 0};
    const RunState compact = step_compact(s0, inst, sched, steps);
    auto states = split_state(s0, n, d);
    const Mailbox mailbox = exchange_messages(states, g);
    states = step_distributed(states, mailbox, inst, sched, steps, 0);
    const RunState stacked = stack_states(states, 1);
    worst = std::max(worst, (compact.x - stacked.x).cwiseAbs().maxCoeff());
    worst = std::max(worst,
                     (compact.lambda - stacked.lambda).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-13);
}

TEST_CASE("engines agree over 100 iterations on a Setup-1-sized instance") {
  const ProblemInstance inst =
      make_least_squares(6, 0.7, 3, 20, 1.0, Vector::Ones(3), 7);
  const UpdateSchedule sched = UpdateSchedule::dish_k(6, 3);
  const Stepsizes steps = Stepsizes::uniform(6, 0.2, 0.05, 1.0);
  CHECK(max_engine_deviation(inst, sched, steps, 100) <= 1e-12);
}

TEST_CASE("serial and OpenMP kernels are bit-identical") {
  const ProblemInstance inst =
      make_logistic(6, 0.7, 2, 10, 1.0, Vector::Ones(2), 8);
  const UpdateSchedule sched = UpdateSchedule::switching_uniform(6, 5, 20, 2);
  const Stepsizes steps = Stepsizes::uniform(6, 0.3, 0.05, 0.5);
  CHECK(max_serial_omp_deviation(inst, sched, steps, 50) == 0.0);
}

TEST_CASE("message count is two per edge and tampering is rejected") {
  const ProblemInstance inst = ring_toy();
  const RunState s0 = initial_state(inst);
  auto states = split_state(s0, 5, 2);
  Mailbox mailbox = exchange_messages(states, inst.topology.graph());
  CHECK(message_count(mailbox) ==
        2 * static_cast<long>(inst.topology.graph().edges.size()));

  const UpdateSchedule sched = UpdateSchedule::constant(5, kGradientUpdate);
  const Stepsizes steps = Stepsizes::uniform(5, 0.3, 0.1, 0.0);
  Mailbox missing = mailbox;
  missing[2].pop_back();
  CHECK_THROWS_WITH_AS(
      step_distributed(states, missing, inst, sched, steps, 0),
      "protocol violation", Error);

  Mailbox wrong_sender = mailbox;
  wrong_sender[2][0].from = 2;  // not a neighbor of itself
  CHECK_THROWS_WITH_AS(
      step_distributed(states, wrong_sender, inst, sched, steps, 0),
      "protocol violation", Error);
}

TEST_CASE("star center residual vanishes when all nodes agree") {
  const Graph star = Graph::from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  const ConsensusMatrix cm = ConsensusMatrix::degree_weights(star, 2);
  Vector v(10);
  for (int i = 0; i < 5; ++i) v.segment(2 * i, 2) << 1.5, -0.5;
  const Vector w = cm.apply_W(v);
  CHECK(w.segment(0, 2).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("DISH-K with K=n equals the all-Newton schedule exactly") {
  const ProblemInstance inst = ring_toy();
  const UpdateSchedule all_newton = UpdateSchedule::constant(5, kNewtonUpdate);
  const UpdateSchedule dish_n = UpdateSchedule::dish_k(5, 5);
  const Stepsizes steps = Stepsizes::uniform(5, 0.3, 0.02, 1.0);
  RunOptions opts;
  opts.max_iters = 100;
  opts.target_rel_err = 1e-13;
  std::ostringstream a, b;
  run(inst, all_newton, steps, opts).write_csv(a);
  run(inst, dish_n, steps, opts).write_csv(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("identical seeds give bit-identical traces") {
  const ProblemInstance inst = ring_toy();
  const UpdateSchedule sched = UpdateSchedule::switching_lognormal(5, 2.0, 4.0, 30.0, 77);
  const Stepsizes steps = Stepsizes::uniform(5, 0.4, 0.01, 0.5);
  RunOptions opts;
  opts.max_iters = 120;
  std::ostringstream a, b;
  run(inst, sched, steps, opts).write_csv(a);
  run(inst, sched, steps, opts).write_csv(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("k,rel_err,consensus_residual,merit,dual_gap,primal_err,kinds\n",
                      0) == 0);
}

TEST_CASE("divergence aborts with a diagnostic and a partial trace") {
  const ProblemInstance inst = ring_toy();
  const UpdateSchedule sched = UpdateSchedule::constant(5, kGradientUpdate);
  const Stepsizes steps = Stepsizes::uniform(5, 1e6, 1e6, 0.0);
  RunOptions opts;
  opts.max_iters = 1000;
  const Trace trace = run(inst, sched, steps, opts);
  CHECK(trace.diverged);
  CHECK(trace.diverged_at >= 1);
  CHECK(trace.message.rfind("divergence at iteration", 0) == 0);
  CHECK(trace.rows.size() >= 2);
  CHECK_FALSE(trace.reached_target());
}

TEST_CASE("starting at the optimum reports absolute error") {
  const ProblemInstance inst = ring_toy();
  const UpdateSchedule sched = UpdateSchedule::constant(5, kGradientUpdate);
  const Stepsizes steps = Stepsizes::uniform(5, 0.3, 0.1, 0.0);
  const Vector x0 = inst.x_opt_stacked();
  const Vector lambda0 = stationary_multiplier(inst);
  RunOptions opts;
  opts.max_iters = 10;
  const Trace trace = run(inst, sched, steps, x0, lambda0, opts);
  CHECK(trace.absolute_error);
  CHECK(trace.initial_error == 0.0);
  CHECK(trace.iterations_to_target == 0);
  CHECK(trace.rows.front().rel_err == 0.0);
}

TEST_CASE("run stops at the relative-error target") {
  const ProblemInstance inst = ring_toy();
  const UpdateSchedule sched = UpdateSchedule::constant(5, kGradientUpdate);
  const Stepsizes steps = Stepsizes::uniform(5, 0.4, 0.3, 1.0);
  RunOptions opts;
  opts.max_iters = 200000;
  opts.target_rel_err = 1e-8;
  const Trace trace = run(inst, sched, steps, opts);
  REQUIRE(trace.reached_target());
  CHECK(trace.rows.back().rel_err <= 1e-8);
  CHECK(trace.iterations_to_target == trace.rows.back().k);
  CHECK(trace.iterations_to_target < 200000);
}

TEST_CASE("trace stride keeps first and last rows") {
  const ProblemInstance inst = ring_toy();
  const UpdateSchedule sched = UpdateSchedule::constant(5, kGradientUpdate);
  const Stepsizes steps = Stepsizes::uniform(5, 0.3, 0.1, 0.5);
  RunOptions opts;
  opts.max_iters = 57;
  opts.target_rel_err = 1e-14;
  opts.trace_stride = 10;
  const Trace trace = run(inst, sched, steps, opts);
  REQUIRE(trace.rows.size() >= 2);
  CHECK(trace.rows.front().k == 0);
  CHECK(trace.rows.back().k == 57);
  CHECK(trace.rows[1].k == 10);

  opts.trace_stride = 0;
  const Trace bare = run(inst, sched, steps, opts);
  CHECK(bare.rows.size() == 2);  // k = 0 and the final row
}

TEST_CASE("schedule constructors validate and report kinds") {
  CHECK_THROWS_AS(UpdateSchedule::dish_k(4, 5), Error);
  CHECK_THROWS_AS(UpdateSchedule::switching_uniform(4, 0, 10, 1), Error);

  const UpdateSchedule k2 = UpdateSchedule::dish_k(4, 2);
  CHECK(k2.kind(0, 0) == kNewtonUpdate);
  CHECK(k2.kind(3, 0) == kGradientUpdate);
  CHECK(k2.kind(0, 1000) == kNewtonUpdate);
  CHECK(k2.possible_kinds(0).size() == 1);
  CHECK(k2.any_gradient_primal());
  CHECK_FALSE(UpdateSchedule::constant(4, kNewtonUpdate).any_gradient_primal());

  const UpdateSchedule sw = UpdateSchedule::switching_uniform(4, 5, 50, 3);
  CHECK(sw.switching());
  CHECK(sw.possible_kinds(0).size() == 2);
  for (int i = 0; i < 4; ++i) {
    const UpdateKind first = sw.kind(i, 0);
    long flip = -1;
    for (long k = 1; k < 60; ++k)
      if (!(sw.kind(i, k) == first)) {
        flip = k;
        break;
      }
    REQUIRE(flip >= 5);
    CHECK(flip <= 50);
    // period boundaries: constant within [0, flip), flipped at [flip, 2 flip)
    CHECK(sw.kind(i, flip - 1) == first);
    CHECK_FALSE(sw.kind(i, 2 * flip - 1) == first);
    CHECK(sw.kind(i, 2 * flip) == first);
  }
}

TEST_CASE("stepsizes validate positivity and size") {
  Stepsizes s = Stepsizes::uniform(3, 0.1, 0.1, 0.0);
  CHECK_NOTHROW(s.validate(3));
  CHECK_THROWS_AS(s.validate(4), Error);
  s.a(1) = 0.0;
  CHECK_THROWS_AS(s.validate(3), Error);
  s = Stepsizes::uniform(3, 0.1, 0.1, -0.5);
  CHECK_THROWS_AS(s.validate(3), Error);

  // unit-a substitution applies to Newton-type primal steps only
  s = Stepsizes::uniform(3, 0.1, 0.1, 0.0);
  s.unit_newton_primal = true;
  CHECK(s.primal_step(0, PrimalKind::Gradient) == 0.1);
  CHECK(s.primal_step(0, PrimalKind::Newton) == 1.0);
  CHECK(s.primal_step(0, PrimalKind::Esom) == 1.0);
}

TEST_CASE("step_compact rejects dimension mismatches") {
  const ProblemInstance inst = ring_toy();
  const UpdateSchedule sched = UpdateSchedule::constant(5, kGradientUpdate);
  const Stepsizes steps = Stepsizes::uniform(5, 0.1, 0.1, 0.0);
  CHECK_THROWS_AS(
      step_compact(RunState{Vector::Zero(4), Vector::Zero(4), 0}, inst, sched, steps),
      Error);
}
