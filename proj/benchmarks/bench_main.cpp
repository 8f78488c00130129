// Benchmark: serial reference kernel vs the OpenMP kernel across instance
// sizes, and grid-search tuning with one thread vs all threads.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "dish/engine.hpp"
#include "dish/harness.hpp"
#include "dish/objectives.hpp"
#include "dish/rng.hpp"

using namespace dish;

namespace {

Vector random_vector(Rng& rng, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = rng.normal();
  return v;
}

ProblemInstance synthetic_instance(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> centers;
  for (int i = 0; i < n; ++i) centers.push_back(random_vector(rng, d));
  // sparse-ish random topology so the neighbor sums dominate honestly
  const double p = std::min(1.0, 8.0 / n);
  const Graph g = erdos_renyi(n, p, seed);
  return make_quadratic_toy(centers, ConsensusMatrix::degree_weights(g, d));
}

double time_steps(const ProblemInstance& inst, Execution exec, int iters) {
  const UpdateSchedule sched = UpdateSchedule::dish_k(inst.n(), inst.n() / 2);
  const Stepsizes steps = Stepsizes::uniform(inst.n(), 0.05, 0.01, 1.0);
  RunOptions opts;
  opts.max_iters = iters;
  opts.target_rel_err = 1e-300;  // never stop early
  opts.trace_stride = 0;
  opts.exec = exec;
  const auto t0 = std::chrono::steady_clock::now();
  run(inst, sched, steps, opts);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double time_tune(const ProblemInstance& inst, bool parallel) {
  TuningGrid grid;
  grid.target_rel_err = 1e-8;
  grid.max_iters = 20000;
  grid.parallel = parallel;
  const auto t0 = std::chrono::steady_clock::now();
  tune(inst, UpdateSchedule::dish_k(inst.n(), inst.n() / 2), grid);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", omp_get_max_threads());

  std::printf("step kernel, serial vs OpenMP (us/iteration)\n");
  std::printf("%8s %4s %6s %12s %12s %8s\n", "n", "d", "iters", "serial",
               "openmp", "speedup");
  struct Case {
    int n, d, iters;
  };
  for (const Case c : {Case{10, 5, 20000}, Case{100, 8, 4000},
                       Case{400, 8, 1000}, Case{1600, 16, 200}}) {
    const ProblemInstance inst = synthetic_instance(c.n, c.d, 1);
    time_steps(inst, Execution::Serial, c.iters / 10 + 1);  // warm up
    const double serial = time_steps(inst, Execution::Serial, c.iters);
    const double parallel = time_steps(inst, Execution::OpenMP, c.iters);
    std::printf("%8d %4d %6d %12.3f %12.3f %7.2fx\n", c.n, c.d, c.iters,
                1e6 * serial / c.iters, 1e6 * parallel / c.iters,
                serial / parallel);
  }

  std::printf("\ngrid-search tuning, 1 thread vs %d threads (seconds)\n",
              omp_get_max_threads());
  const ProblemInstance tune_inst = synthetic_instance(12, 4, 2);
  const double single = time_tune(tune_inst, false);
  const double multi = time_tune(tune_inst, true);
  std::printf("%8s %12.3f %12.3f %7.2fx\n", "n=12,d=4", single, multi,
              single / multi);
  return 0;
}
