#pragma once

#include "fpaccel/types.hpp"

namespace fpaccel {

// Squared-extrapolation scheme: r = G(x) - x, v = G(G(x)) - 2 G(x) + x,
// steplength a = -||r||/||v||, candidate x - 2 a r + a^2 v, followed by one
// stabilizing map application when accepted. Merit-guarded (slack
// cfg.epsilon) when prob.merit is present; rejected or degenerate steps use
// the double-map iterate G(G(x)).
SolveReport solve_squarem(const FixedPointProblem& prob, const VectorXd& x0,
                          const SolverConfig& cfg);

// Limited-memory quasi-Newton scheme on the residual map with history order
// q = cfg.order: x_{k+1} = x_k + f_k + V (U'U - U'V)^{-1} U' f_k where
// column j of U is f(x_j) and column j of V is G(G(x_j)) - G(x_j) for the
// last q iterates. Plain map steps fill the history first. Two map
// evaluations per iteration. Strictly monotone (zero slack) when prob.merit
// is present.
SolveReport solve_qnz(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg);

}  // namespace fpaccel
