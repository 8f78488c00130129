#pragma once

#include <vector>

#include "dish/engine.hpp"
#include "dish/objectives.hpp"
#include "dish/types.hpp"

namespace dish::reference {

/// Independently coded recursions used to cross-validate the engine. These
/// deliberately work on explicit dense matrices (the Kronecker lift is
/// materialized) and share none of the blockwise plumbing.

/// Arrow-Hurwicz-Uzawa primal-dual gradient recursion:
///   x+ = x - A (grad f(x) + W lambda + mu W x),  lambda+ = lambda + B W x.
/// Returns the iterates after each of `iterations` steps.
std::vector<RunState> arrow_hurwicz(const ProblemInstance& instance,
                                    const Vector& a, const Vector& b,
                                    double mu, Vector x0, Vector lambda0,
                                    int iterations);

/// ESOM-0: primal Newton-type step through the explicit inverse of the
/// diagonally approximated Hessian blocks H_i + mu (1 - z_ii) I, dual
/// gradient ascent.
std::vector<RunState> esom0(const ProblemInstance& instance, const Vector& a,
                            const Vector& b, double mu, Vector x0,
                            Vector lambda0, int iterations);

}  // namespace dish::reference

namespace dish {

/// EXTRA baseline (its own two-step recursion, not DISH plumbing) with
/// mixing matrices Z (x) I_d and ((I + Z)/2) (x) I_d:
///   x^1     = Z x^0 - alpha grad f(x^0),
///   x^{k+1} = (I + Z) x^k - W~ x^{k-1} - alpha (grad f(x^k) - grad f(x^{k-1})).
Trace run_extra(const ProblemInstance& instance, double alpha,
                const Vector& x0, const RunOptions& opts = {});
Trace run_extra(const ProblemInstance& instance, double alpha,
                const RunOptions& opts = {});

}  // namespace dish
