#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dish/analysis.hpp"
#include "dish/engine.hpp"
#include "dish/objectives.hpp"

namespace dish {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Max absolute per-coordinate deviation between the compact and the
/// message-level engine over `iterations` steps.
double max_engine_deviation(const ProblemInstance& instance,
                            const UpdateSchedule& schedule,
                            const Stepsizes& steps, int iterations);

/// Max absolute per-coordinate deviation between the serial and the OpenMP
/// step kernel over `iterations` steps (expected to be exactly zero).
double max_serial_omp_deviation(const ProblemInstance& instance,
                                const UpdateSchedule& schedule,
                                const Stepsizes& steps, int iterations);

/// Central finite-difference gradient of a scalar function of x.
Vector fd_gradient(const std::function<double(const Vector&)>& f,
                   const Vector& x, double h);

/// A dual multiplier with W lambda = -grad f(x_opt stacked); together with
/// the stacked optimum this is a stationary point of every DISH update.
Vector stationary_multiplier(const ProblemInstance& instance);

/// Runs the module invariant suites (topology, objectives, engines,
/// special-case reductions, dual calculus, curvature bounds, contraction,
/// determinism). Each entry prints as one pass/fail line by the CLI.
std::vector<CheckResult> run_verification();

}  // namespace dish
