#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpaccel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// A fixed-point problem x = G(x). merit is an objective that G ascends
// (e.g. a log-likelihood for an EM map); solvers with monotonicity control
// require it, the others ignore it. feasible guards the domain of G and
// merit; extrapolated candidates failing it are rejected.
struct FixedPointProblem {
  Eigen::Index dim = 0;
  std::function<VectorXd(const VectorXd&)> map;
  std::function<double(const VectorXd&)> merit;     // optional
  std::function<bool(const VectorXd&)> feasible;    // optional
};

struct NonFiniteIterate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  int order = 0;            // history length m; 0 = auto (10 if dim > 20, else dim/2, at least 1)
  double epsilon = 0.01;    // merit may drop by at most this per accepted step
  double epsilon_c = 0.0;   // cycle-end slack before the damping exponent is cut
  double alpha = 1.2;       // damping schedule base
  double kappa = 25.0;      // damping schedule offset
  int damping_floor = 0;    // D, lower bound -D on the exponent; 0 = auto (2 * order)
  double tol = 1e-8;        // stop when ||x_{k+1} - x_k|| < tol
  std::uint64_t max_map_evals = 25000;
  bool record_trace = false;

  int resolved_order(Eigen::Index dim) const {
    if (order > 0) return order;
    if (dim > 20) return 10;
    return std::max<int>(1, static_cast<int>(dim / 2));
  }

  int resolved_floor(Eigen::Index dim) const {
    return damping_floor > 0 ? damping_floor : 2 * resolved_order(dim);
  }

  void validate(Eigen::Index dim) const {
    if (dim < 1) throw std::invalid_argument("problem dimension must be positive");
    if (order < 0 || order > dim)
      throw std::invalid_argument("order must be in [1, dim] (or 0 for auto)");
    if (epsilon < 0 || epsilon_c < 0) throw std::invalid_argument("epsilon must be nonnegative");
    if (alpha <= 1.0) throw std::invalid_argument("alpha must exceed 1");
    if (kappa < 0) throw std::invalid_argument("kappa must be nonnegative");
    if (damping_floor < 0) throw std::invalid_argument("damping_floor must be nonnegative");
    if (!(tol > 0)) throw std::invalid_argument("tol must be positive");
    if (max_map_evals == 0) throw std::invalid_argument("max_map_evals must be positive");
  }
};

enum class StepOutcome {
  PlainStep,             // unaccelerated iterate: EM solver, warm-up, initial step
  Accepted,              // extrapolated candidate kept
  FallbackMonotonicity,  // merit dropped more than epsilon
  FallbackNonFinite,     // candidate or its merit was NaN/Inf
  FallbackInfeasible,    // feasibility predicate rejected the candidate
};

inline const char* to_string(StepOutcome o) {
  switch (o) {
    case StepOutcome::PlainStep: return "em";
    case StepOutcome::Accepted: return "accepted";
    case StepOutcome::FallbackMonotonicity: return "fallback_monotonicity";
    case StepOutcome::FallbackNonFinite: return "fallback_nonfinite";
    case StepOutcome::FallbackInfeasible: return "fallback_infeasible";
  }
  return "unknown";
}

// One record per produced iterate. k = 0 is the initial plain step every
// solver takes; loop iterations count from 1. Fields a solver does not
// compute stay NaN.
struct TraceEntry {
  std::uint64_t k = 0;
  double f_norm = kNaN;     // ||G(x_k) - x_k||
  double step_norm = kNaN;  // ||x_{k+1} - x_k||
  double merit = kNaN;      // merit of the accepted iterate, when evaluated
  double delta = kNaN;      // damping target delta_k
  double lambda = kNaN;     // accepted ridge parameter
  StepOutcome outcome = StepOutcome::PlainStep;
  int m_k = 0;              // history columns used this iteration
  long cycle = 0;           // c_k
  long damp_exp = 0;        // s_k
};

struct SolveReport {
  VectorXd x;
  bool converged = false;
  std::uint64_t n_map_evals = 0;
  std::uint64_t n_merit_evals = 0;
  std::uint64_t n_iterations = 0;  // iterates produced, including the initial step
  std::uint64_t n_fallbacks = 0;
  std::uint64_t n_fallback_monotonicity = 0;
  std::uint64_t n_fallback_nonfinite = 0;
  std::uint64_t n_fallback_infeasible = 0;
  std::optional<double> merit_final;
  std::vector<TraceEntry> trace;
};

}  // namespace fpaccel
