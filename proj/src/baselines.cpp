#include "fpaccel/baselines.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace fpaccel {

namespace {

void check_start(const FixedPointProblem& prob, const VectorXd& x0) {
  if (!prob.map) throw std::invalid_argument("problem has no map");
  if (x0.size() != prob.dim) throw std::invalid_argument("x0 has wrong dimension");
  if (!x0.allFinite()) throw NonFiniteIterate("x0 is not finite");
  if (prob.feasible && !prob.feasible(x0)) throw std::invalid_argument("x0 is infeasible");
}

struct Evaluator {
  const FixedPointProblem& prob;
  SolveReport& rep;

  VectorXd map(const VectorXd& x) {
    ++rep.n_map_evals;
    VectorXd g = prob.map(x);
    if (g.size() != prob.dim) throw std::invalid_argument("map changed dimension");
    if (!g.allFinite()) throw NonFiniteIterate("map returned non-finite values");
    return g;
  }

  double merit(const VectorXd& x) {
    ++rep.n_merit_evals;
    return prob.merit(x);
  }

  bool feasible(const VectorXd& x) const { return !prob.feasible || prob.feasible(x); }
};

// Shared initial plain step; returns true if already converged.
bool initial_step(Evaluator& ev, const SolverConfig& cfg, VectorXd& x, double& merit_x,
                  bool monotone) {
  const VectorXd g = ev.map(x);
  const double step = (g - x).norm();
  x = g;
  if (monotone) merit_x = ev.merit(x);
  ++ev.rep.n_iterations;
  if (cfg.record_trace)
    ev.rep.trace.push_back({0, step, step, merit_x, kNaN, kNaN, StepOutcome::PlainStep, 0, 0, 0});
  return step < cfg.tol;
}

void record_fallback(SolveReport& rep, StepOutcome out) {
  ++rep.n_fallbacks;
  if (out == StepOutcome::FallbackMonotonicity) ++rep.n_fallback_monotonicity;
  if (out == StepOutcome::FallbackNonFinite) ++rep.n_fallback_nonfinite;
  if (out == StepOutcome::FallbackInfeasible) ++rep.n_fallback_infeasible;
}

}  // namespace

SolveReport solve_squarem(const FixedPointProblem& prob, const VectorXd& x0,
                          const SolverConfig& cfg) {
  cfg.validate(prob.dim);
  check_start(prob, x0);
  const bool monotone = static_cast<bool>(prob.merit);

  SolveReport rep;
  Evaluator ev{prob, rep};
  VectorXd x = x0;
  double merit_x = kNaN;
  if (initial_step(ev, cfg, x, merit_x, monotone)) {
    rep.converged = true;
    rep.x = x;
    if (prob.merit) rep.merit_final = monotone ? merit_x : ev.merit(x);
    return rep;
  }

  for (std::uint64_t k = 1;; ++k) {
    if (rep.n_map_evals >= cfg.max_map_evals) break;
    const VectorXd u1 = ev.map(x);
    const VectorXd r = u1 - x;
    const double r_norm = r.norm();
    if (r_norm == 0.0) {
      // landed exactly on a fixed point
      if (cfg.record_trace)
        rep.trace.push_back({k, 0.0, 0.0, merit_x, kNaN, kNaN, StepOutcome::PlainStep, 0, 0, 0});
      ++rep.n_iterations;
      rep.converged = true;
      break;
    }
    const VectorXd u2 = ev.map(u1);
    const VectorXd v = u2 - 2.0 * u1 + x;
    const double v_norm = v.norm();

    TraceEntry te;
    te.k = k;
    te.f_norm = r_norm;

    StepOutcome out;
    VectorXd x_next;
    double merit_next = kNaN;
    if (v_norm == 0.0) {
      // curvature vanished; keep the double plain step
      out = StepOutcome::PlainStep;
      x_next = u2;
      if (monotone) merit_next = ev.merit(x_next);
    } else {
      const double a = -r_norm / v_norm;
      const VectorXd cand = x - 2.0 * a * r + a * a * v;
      if (!cand.allFinite()) {
        out = StepOutcome::FallbackNonFinite;
      } else if (!ev.feasible(cand)) {
        out = StepOutcome::FallbackInfeasible;
      } else if (monotone) {
        const double mc = ev.merit(cand);
        if (!std::isfinite(mc)) out = StepOutcome::FallbackNonFinite;
        else if (mc >= merit_x - cfg.epsilon) out = StepOutcome::Accepted;
        else out = StepOutcome::FallbackMonotonicity;
      } else {
        out = StepOutcome::Accepted;
      }

      if (out == StepOutcome::Accepted) {
        x_next = ev.map(cand);  // stabilizing plain step
        if (monotone) merit_next = ev.merit(x_next);
      } else {
        x_next = u2;  // double plain step, already evaluated
        if (monotone) merit_next = ev.merit(x_next);
        record_fallback(rep, out);
      }
    }

    const double step_norm = (x_next - x).norm();
    te.step_norm = step_norm;
    te.merit = merit_next;
    te.outcome = out;
    if (cfg.record_trace) rep.trace.push_back(te);
    ++rep.n_iterations;
    x = x_next;
    if (monotone) merit_x = merit_next;
    if (step_norm < cfg.tol) {
      rep.converged = true;
      break;
    }
  }

  rep.x = x;
  if (prob.merit) rep.merit_final = monotone ? merit_x : ev.merit(x);
  return rep;
}

SolveReport solve_qnz(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg) {
  cfg.validate(prob.dim);
  check_start(prob, x0);
  const bool monotone = static_cast<bool>(prob.merit);
  const int q = cfg.resolved_order(prob.dim);

  SolveReport rep;
  Evaluator ev{prob, rep};
  VectorXd x = x0;
  double merit_x = kNaN;
  if (initial_step(ev, cfg, x, merit_x, monotone)) {
    rep.converged = true;
    rep.x = x;
    if (prob.merit) rep.merit_final = monotone ? merit_x : ev.merit(x);
    return rep;
  }

  MatrixXd U(prob.dim, q), V(prob.dim, q);
  int n_pairs = 0;

  for (std::uint64_t k = 1;; ++k) {
    if (rep.n_map_evals >= cfg.max_map_evals) break;
    const VectorXd g1 = ev.map(x);
    const VectorXd f = g1 - x;
    const VectorXd g2 = ev.map(g1);

    // secant pair for the current iterate; oldest column drops out
    if (n_pairs == q) {
      for (int j = 0; j + 1 < q; ++j) {
        U.col(j) = U.col(j + 1);
        V.col(j) = V.col(j + 1);
      }
      --n_pairs;
    }
    U.col(n_pairs) = f;
    V.col(n_pairs) = g2 - g1;
    ++n_pairs;

    TraceEntry te;
    te.k = k;
    te.f_norm = f.norm();
    te.m_k = n_pairs;

    StepOutcome out = StepOutcome::PlainStep;
    VectorXd x_next;
    double merit_next = kNaN;
    bool extrapolated = false;
    if (n_pairs == q) {
      const MatrixXd A = U.transpose() * (U - V);
      const Eigen::FullPivLU<MatrixXd> lu(A);
      if (lu.isInvertible()) {
        const VectorXd gamma = lu.solve(U.transpose() * f);
        const VectorXd cand = x + f + V * gamma;
        extrapolated = true;
        if (!cand.allFinite()) {
          out = StepOutcome::FallbackNonFinite;
        } else if (!ev.feasible(cand)) {
          out = StepOutcome::FallbackInfeasible;
        } else if (monotone) {
          const double mc = ev.merit(cand);
          // strict monotone control: no slack
          if (!std::isfinite(mc)) {
            out = StepOutcome::FallbackNonFinite;
          } else if (mc >= merit_x) {
            out = StepOutcome::Accepted;
            merit_next = mc;
          } else {
            out = StepOutcome::FallbackMonotonicity;
          }
        } else {
          out = StepOutcome::Accepted;
        }
        if (out == StepOutcome::Accepted) x_next = cand;
      }
    }

    if (out != StepOutcome::Accepted) {
      x_next = g1;  // plain step
      if (monotone) merit_next = ev.merit(x_next);
      if (extrapolated) record_fallback(rep, out);
    }

    const double step_norm = (x_next - x).norm();
    te.step_norm = step_norm;
    te.merit = merit_next;
    te.outcome = out;
    if (cfg.record_trace) rep.trace.push_back(te);
    ++rep.n_iterations;
    x = x_next;
    if (monotone) merit_x = merit_next;
    if (step_norm < cfg.tol) {
      rep.converged = true;
      break;
    }
  }

  rep.x = x;
  if (prob.merit) rep.merit_final = monotone ? merit_x : ev.merit(x);
  return rep;
}

}  // namespace fpaccel
