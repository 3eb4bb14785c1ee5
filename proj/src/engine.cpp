#include "fpaccel/engine.hpp"

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

void finish(SolveReport& rep, Evaluator& ev, const FixedPointProblem& prob, bool monotone,
            double merit_cached) {
  if (!prob.merit) return;
  rep.merit_final = monotone ? merit_cached : ev.merit(rep.x);
}

struct Flags {
  bool restarts = false;
  bool damped = false;
  bool monotone = false;
};

SolveReport run_window_accel(const FixedPointProblem& prob, const VectorXd& x0,
                             const SolverConfig& cfg, Flags flags) {
  cfg.validate(prob.dim);
  check_start(prob, x0);
  if (flags.monotone && !prob.merit) throw std::invalid_argument("solver requires a merit");

  const int m = cfg.resolved_order(prob.dim);
  const long floor_exp = -static_cast<long>(cfg.resolved_floor(prob.dim));

  SolveReport rep;
  Evaluator ev{prob, rep};

  AccelState st{x0, VectorXd(), HistoryBuffer(prob.dim, m), 1, 0, -kInf, {}};

  // initial plain step x1 = x0 + f(x0)
  VectorXd prev_x = x0;
  VectorXd g = ev.map(x0);
  VectorXd prev_f = g - x0;
  st.x = g;
  double merit_x = kNaN;
  if (flags.monotone) {
    merit_x = ev.merit(st.x);
    st.merit_anchor = merit_x;
  }
  ++rep.n_iterations;
  if (cfg.record_trace)
    rep.trace.push_back({0, prev_f.norm(), prev_f.norm(), merit_x, kNaN, kNaN,
                         StepOutcome::PlainStep, 0, 0, 0});
  if (prev_f.norm() < cfg.tol) {
    rep.converged = true;
    rep.x = st.x;
    finish(rep, ev, prob, flags.monotone, merit_x);
    return rep;
  }

  for (std::uint64_t k = 1;; ++k) {
    if (rep.n_map_evals >= cfg.max_map_evals) break;

    g = ev.map(st.x);
    st.f = g - st.x;
    st.history.push(st.x - prev_x, st.f - prev_f);
    const int mk = st.history.size();

    TraceEntry te;
    te.k = k;
    te.f_norm = st.f.norm();
    te.m_k = mk;
    te.cycle = st.cycle;
    te.damp_exp = st.damp_exp;

    // extrapolated candidate
    const auto fac = damping::factor(st.history.df_matrix(), st.f);
    VectorXd gamma = VectorXd::Zero(mk);
    if (flags.damped) {
      te.delta = compute_delta(st.damp_exp, cfg);
      if (fac.rank > 0 && damping::beta_ls_norm(fac) > 0.0) {
        const auto dr =
            damping::find_lambda_scheduled(fac, cfg.alpha, cfg.kappa, st.damp_exp, st.warm);
        st.warm = {dr.lambda, dr.residual, true};
        te.lambda = dr.lambda;
        gamma = damping::ridge_gamma(fac, dr.lambda);
      }
    } else if (fac.rank > 0) {
      gamma = damping::ridge_gamma(fac, 0.0);
    }
    const VectorXd cand = aa_step(st, gamma);

    // accept or fall back to the plain iterate g
    StepOutcome out;
    double merit_next = kNaN;
    if (!cand.allFinite()) {
      out = StepOutcome::FallbackNonFinite;
    } else if (!ev.feasible(cand)) {
      out = StepOutcome::FallbackInfeasible;
    } else if (flags.monotone) {
      const double mc = ev.merit(cand);
      if (!std::isfinite(mc)) {
        out = StepOutcome::FallbackNonFinite;
      } else if (mc >= merit_x - cfg.epsilon) {
        out = StepOutcome::Accepted;
        merit_next = mc;
      } else {
        out = StepOutcome::FallbackMonotonicity;
      }
    } else {
      out = StepOutcome::Accepted;
    }

    VectorXd x_next;
    if (out == StepOutcome::Accepted) {
      x_next = cand;
      if (flags.damped) ++st.damp_exp;
    } else {
      x_next = g;
      if (flags.monotone) merit_next = ev.merit(x_next);
      ++rep.n_fallbacks;
      if (out == StepOutcome::FallbackMonotonicity) ++rep.n_fallback_monotonicity;
      if (out == StepOutcome::FallbackNonFinite) ++rep.n_fallback_nonfinite;
      if (out == StepOutcome::FallbackInfeasible) ++rep.n_fallback_infeasible;
    }

    // cycle bookkeeping
    if (flags.restarts && k % static_cast<std::uint64_t>(m) == 0) {
      if (flags.damped && flags.monotone && std::isfinite(st.merit_anchor) &&
          !(merit_next >= st.merit_anchor - cfg.epsilon_c))
        st.damp_exp = std::max(st.damp_exp - m, floor_exp);
      st.cycle = 1;
      st.history.clear();
      if (flags.monotone) st.merit_anchor = merit_next;
    } else {
      ++st.cycle;
    }

    const double step_norm = (x_next - st.x).norm();
    te.step_norm = step_norm;
    te.merit = merit_next;
    te.outcome = out;
    if (cfg.record_trace) rep.trace.push_back(te);
    ++rep.n_iterations;

    prev_x = st.x;
    prev_f = st.f;
    st.x = x_next;
    if (flags.monotone) merit_x = merit_next;

    if (step_norm < cfg.tol) {
      rep.converged = true;
      break;
    }
  }

  rep.x = st.x;
  finish(rep, ev, prob, flags.monotone, merit_x);
  return rep;
}

}  // namespace

VectorXd aa_step(const AccelState& st, const VectorXd& gamma) {
  if (gamma.size() != st.history.size())
    throw std::invalid_argument("aa_step: gamma length != history size");
  if (gamma.size() == 0) return st.x + st.f;
  return st.x + st.f - (st.history.dx_matrix() + st.history.df_matrix()) * gamma;
}

double compute_delta(long s, const SolverConfig& cfg) {
  return damping::shrink_target(cfg.alpha, cfg.kappa, static_cast<double>(s));
}

SolveReport solve_em(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg) {
  cfg.validate(prob.dim);
  check_start(prob, x0);

  SolveReport rep;
  Evaluator ev{prob, rep};
  VectorXd x = x0;
  while (rep.n_map_evals < cfg.max_map_evals) {
    const VectorXd g = ev.map(x);
    const double step = (g - x).norm();
    if (cfg.record_trace)
      rep.trace.push_back({rep.n_iterations, step, step, kNaN, kNaN, kNaN,
                           StepOutcome::PlainStep, 0, 0, 0});
    ++rep.n_iterations;
    x = g;
    if (step < cfg.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.x = x;
  finish(rep, ev, prob, false, kNaN);
  return rep;
}

SolveReport solve_aa(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg) {
  return run_window_accel(prob, x0, cfg, {false, false, false});
}

SolveReport solve_raa(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg) {
  return run_window_accel(prob, x0, cfg, {true, false, false});
}

SolveReport solve_daarem(const FixedPointProblem& prob, const VectorXd& x0,
                         const SolverConfig& cfg) {
  return run_window_accel(prob, x0, cfg, {true, true, true});
}

SolveReport solve_aa1(const FixedPointProblem& prob, const VectorXd& x0, const SolverConfig& cfg) {
  cfg.validate(prob.dim);
  check_start(prob, x0);
  const bool monotone = static_cast<bool>(prob.merit);

  SolveReport rep;
  Evaluator ev{prob, rep};

  // initial plain step
  VectorXd g_prev = ev.map(x0);
  VectorXd f_prev = g_prev - x0;
  VectorXd x = g_prev;
  double merit_x = kNaN;
  if (monotone) merit_x = ev.merit(x);
  ++rep.n_iterations;
  if (cfg.record_trace)
    rep.trace.push_back({0, f_prev.norm(), f_prev.norm(), merit_x, kNaN, kNaN,
                         StepOutcome::PlainStep, 0, 0, 0});
  if (f_prev.norm() < cfg.tol) {
    rep.converged = true;
    rep.x = x;
    finish(rep, ev, prob, monotone, merit_x);
    return rep;
  }

  for (std::uint64_t k = 1;; ++k) {
    if (rep.n_map_evals >= cfg.max_map_evals) break;
    const VectorXd g = ev.map(x);
    const VectorXd f = g - x;
    const VectorXd df = f - f_prev;
    const double denom = df.squaredNorm();

    VectorXd cand;
    if (denom > 0.0) {
      const double gamma = df.dot(f) / denom;
      cand = (1.0 - gamma) * g + gamma * g_prev;
    } else {
      cand = g;
    }

    TraceEntry te;
    te.k = k;
    te.f_norm = f.norm();
    te.m_k = 1;

    StepOutcome out;
    double merit_next = kNaN;
    if (!cand.allFinite()) {
      out = StepOutcome::FallbackNonFinite;
    } else if (prob.feasible && !prob.feasible(cand)) {
      out = StepOutcome::FallbackInfeasible;
    } else if (monotone) {
      const double mc = ev.merit(cand);
      if (!std::isfinite(mc)) {
        out = StepOutcome::FallbackNonFinite;
      } else if (mc >= merit_x - cfg.epsilon) {
        out = StepOutcome::Accepted;
        merit_next = mc;
      } else {
        out = StepOutcome::FallbackMonotonicity;
      }
    } else {
      out = StepOutcome::Accepted;
    }

    VectorXd x_next;
    if (out == StepOutcome::Accepted) {
      x_next = cand;
    } else {
      x_next = g;
      if (monotone) merit_next = ev.merit(x_next);
      ++rep.n_fallbacks;
      if (out == StepOutcome::FallbackMonotonicity) ++rep.n_fallback_monotonicity;
      if (out == StepOutcome::FallbackNonFinite) ++rep.n_fallback_nonfinite;
      if (out == StepOutcome::FallbackInfeasible) ++rep.n_fallback_infeasible;
    }

    const double step_norm = (x_next - x).norm();
    te.step_norm = step_norm;
    te.merit = merit_next;
    te.outcome = out;
    if (cfg.record_trace) rep.trace.push_back(te);
    ++rep.n_iterations;

    g_prev = g;
    f_prev = f;
    x = x_next;
    if (monotone) merit_x = merit_next;

    if (step_norm < cfg.tol) {
      rep.converged = true;
      break;
    }
  }

  rep.x = x;
  finish(rep, ev, prob, monotone, merit_x);
  return rep;
}

}  // namespace fpaccel
