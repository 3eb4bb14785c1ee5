#pragma once

#include <Eigen/Dense>

namespace fpaccel::damping {

// Ridge-regularized least squares gamma(lambda) = (F'F + lambda I)^{-1} F' f,
// solved through the SVD F = U diag(d) V' so the ridge parameter can be
// retuned cheaply: with uf = U'f,
//   gamma(lambda) = V diag(d_l / (d_l^2 + lambda)) uf,
//   ||gamma(lambda)||^2 = sum_l (d_l uf_l / (d_l^2 + lambda))^2.
// Singular values below 1e-12 * d_max are treated as zero, so lambda = 0
// yields the minimum-norm least-squares solution.

struct SvdFactors {
  Eigen::VectorXd d;   // singular values, descending
  Eigen::VectorXd uf;  // U' f
  Eigen::MatrixXd v;   // right singular vectors
  int rank = 0;        // count of singular values above the cutoff
};

SvdFactors factor(const Eigen::MatrixXd& F, const Eigen::VectorXd& f);

// ||gamma(0)||: norm of the minimum-norm least-squares coefficients.
double beta_ls_norm(const SvdFactors& fac);

Eigen::VectorXd ridge_gamma(const SvdFactors& fac, double lambda);

// ||gamma(lambda)||, strictly decreasing in lambda while positive.
double coefficient_norm(const SvdFactors& fac, double lambda);

// phi(lambda) = ||gamma(lambda)|| - target and its derivative (negative).
void phi(const SvdFactors& fac, double lambda, double target, double& value, double& deriv);

struct WarmStart {
  double lambda = 0.0;
  double residual = 0.0;  // scaled phi at the accepted lambda of the previous call
  bool valid = false;
};

struct DampingResult {
  double lambda = 0.0;
  double residual = 0.0;  // feeds the next call's warm start
  double delta = 0.0;     // shrink target that was solved for
  int iterations = 0;
  bool bracket_fallback = false;  // hit the iteration cap, returned bracket midpoint
};

// Finds lambda with ||gamma(lambda)|| close to sqrt(delta) * ||beta_LS||:
// accepted when ||gamma(lambda)|| / ||beta_LS|| lies in [l_stop, u_stop].
// Safeguarded Newton on phi with a maintained bracket [L, U]; out-of-bracket
// steps fall back to max(0.001 U, sqrt(L U)). Pre: beta_ls_norm(fac) > 0.
DampingResult find_lambda(const SvdFactors& fac, double delta, double l_stop, double u_stop,
                          const WarmStart& warm);

// Same, with the shrink schedule delta = 1/(1 + alpha^(kappa - s)) and the
// stopping band implied by half-steps of s:
//   l_stop = (1 + alpha^(kappa - s + 1/2))^{-1/2},
//   u_stop = (1 + alpha^(kappa - s - 1/2))^{-1/2}.
DampingResult find_lambda_scheduled(const SvdFactors& fac, double alpha, double kappa, long s,
                                    const WarmStart& warm);

double shrink_target(double alpha, double kappa, double s);  // 1/(1 + alpha^(kappa - s))

}  // namespace fpaccel::damping
