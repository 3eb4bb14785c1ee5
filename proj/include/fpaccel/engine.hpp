#pragma once

#include "fpaccel/damping.hpp"
#include "fpaccel/history.hpp"
#include "fpaccel/types.hpp"

namespace fpaccel {

// Running state of the window-based accelerators.
struct AccelState {
  VectorXd x;             // current iterate x_k
  VectorXd f;             // residual G(x_k) - x_k
  HistoryBuffer history;  // difference pairs, oldest first
  long cycle = 1;         // c_k, resets to 1 at cycle boundaries
  long damp_exp = 0;      // s_k, moves the shrink target
  double merit_anchor = -kInf;  // merit at the last cycle boundary
  damping::WarmStart warm;      // ridge solver warm start
};

// x_k + f_k - (X_k + F_k) gamma with history columns oldest first;
// gamma.size() must equal history.size().
VectorXd aa_step(const AccelState& st, const VectorXd& gamma);

// Shrink factor delta_k = 1/(1 + alpha^(kappa - s)).
double compute_delta(long s, const SolverConfig& cfg);

// Plain fixed-point iteration x_{k+1} = G(x_k).
SolveReport solve_em(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg);

// Anderson acceleration with a sliding window of cfg.order difference pairs.
SolveReport solve_aa(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg);

// Anderson acceleration with scheduled restarts: the window grows with the
// cycle counter and truncates to one fresh pair every cfg.order iterations.
SolveReport solve_raa(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg);

// Restarted Anderson with ridge-damped coefficients and merit-monotonicity
// control. Requires prob.merit.
SolveReport solve_daarem(const FixedPointProblem& prob, const VectorXd& x0,
                         const SolverConfig& cfg);

// Order-1 scheme: x_{k+1} = (1 - gamma) G(x_k) + gamma G(x_{k-1}) with the
// scalar gamma = df'f_k / df'df. Merit-guarded like solve_daarem when a merit
// is supplied.
SolveReport solve_aa1(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg);

}  // namespace fpaccel
