#pragma once

#include <cstdint>

#include "fpaccel/types.hpp"

namespace fpaccel::probit {

// Binary regression with a standard normal link, fit by alternating the
// latent-variable conditional mean with the weighted least-squares solve.

struct Data {
  MatrixXd X;          // n x p covariates
  Eigen::VectorXi y;   // 0/1 responses
  VectorXd beta_true;  // generator truth, empty when unknown
  std::uint64_t seed = 0;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

// phi(t) / (1 - Phi(t)), stable over the whole real line: complementary
// error function below t = 8, continued fraction beyond.
double inverse_mills(double t);

// log Phi(z), switching to the tail expansion for very negative z.
double log_normal_cdf(double z);

// x_ij ~ N(0,1); beta_j = t_j/2 + 2 with t_j a 2-df Student draw; y from the
// sign of the latent Gaussian index.
Data generate(int n, int p, std::uint64_t seed, std::uint64_t stream = 0);

VectorXd em_map(const Data& d, const VectorXd& beta);
double loglik(const Data& d, const VectorXd& beta);

// single-thread reference implementations (plain loops, no blocking)
VectorXd em_map_serial(const Data& d, const VectorXd& beta);
double loglik_serial(const Data& d, const VectorXd& beta);

// d must outlive the returned problem; the normal-equations factorization is
// cached across map calls.
FixedPointProblem make_problem(const Data& d);
VectorXd default_start(const Data& d);  // zeros

}  // namespace fpaccel::probit
