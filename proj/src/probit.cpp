#include "fpaccel/problems/probit.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "fpaccel/parallel.hpp"
#include "fpaccel/rng.hpp"

namespace fpaccel::probit {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2 pi)

double norm_pdf(double t) { return std::exp(-0.5 * t * t - kLogSqrt2Pi); }

// upper tail 1 - Phi(t)
double norm_sf(double t) { return 0.5 * std::erfc(t * 0.70710678118654752440); }

// Laplace continued fraction for the Mills ratio reciprocal, accurate for
// large positive t: B(t) = t + 1/(t + 2/(t + 3/(...))).
double mills_cf(double t) {
  double r = t;
  for (int n = 30; n >= 1; --n) r = t + n / r;
  return r;
}

VectorXd conditional_mean(const Data& d, const VectorXd& beta) {
  const Eigen::Index n = d.n();
  VectorXd u = d.X * beta;
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = u(i);
    u(i) = d.y(i) == 1 ? t + inverse_mills(-t) : t - inverse_mills(t);
  }
  return u;
}

}  // namespace

double inverse_mills(double t) {
  if (t < 8.0) return norm_pdf(t) / norm_sf(t);
  return mills_cf(t);
}

double log_normal_cdf(double z) {
  if (z > -8.0) return std::log(norm_sf(-z));
  return -0.5 * z * z - kLogSqrt2Pi - std::log(mills_cf(-z));
}

Data generate(int n, int p, std::uint64_t seed, std::uint64_t stream) {
  if (n < 1 || p < 1) throw std::invalid_argument("generate: bad dimensions");
  rng::Stream rs(seed, stream);
  Data d;
  d.seed = seed;
  d.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.X(i, j) = rs.normal();
  d.beta_true.resize(p);
  for (int j = 0; j < p; ++j) d.beta_true(j) = 0.5 * rs.student_t(2.0) + 2.0;
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double latent = d.X.row(i).dot(d.beta_true) + rs.normal();
    d.y(i) = latent > 0.0 ? 1 : 0;
  }
  return d;
}

VectorXd em_map(const Data& d, const VectorXd& beta) {
  const Eigen::LLT<MatrixXd> chol(MatrixXd(d.X.transpose() * d.X));
  if (chol.info() != Eigen::Success)
    throw std::runtime_error("em_map: design matrix is rank deficient");
  const VectorXd u = conditional_mean(d, beta);
  const VectorXd rhs = blocked_accumulate(
      static_cast<std::size_t>(d.n()), VectorXd::Zero(d.p()).eval(),
      [&](std::size_t i, VectorXd& acc) {
        acc += d.X.row(static_cast<Eigen::Index>(i)).transpose() * u(static_cast<Eigen::Index>(i));
      });
  return chol.solve(rhs);
}

double loglik(const Data& d, const VectorXd& beta) {
  const VectorXd xb = d.X * beta;
  return blocked_sum(static_cast<std::size_t>(d.n()), [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    return log_normal_cdf(d.y(ii) == 1 ? xb(ii) : -xb(ii));
  });
}

VectorXd em_map_serial(const Data& d, const VectorXd& beta) {
  const Eigen::Index n = d.n(), p = d.p();
  VectorXd rhs = VectorXd::Zero(p);
  MatrixXd xtx = MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = d.X.row(i).dot(beta);
    const double u = d.y(i) == 1 ? t + inverse_mills(-t) : t - inverse_mills(t);
    rhs += d.X.row(i).transpose() * u;
    xtx += d.X.row(i).transpose() * d.X.row(i);
  }
  return Eigen::LLT<MatrixXd>(xtx).solve(rhs);
}

double loglik_serial(const Data& d, const VectorXd& beta) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double t = d.X.row(i).dot(beta);
    acc += log_normal_cdf(d.y(i) == 1 ? t : -t);
  }
  return acc;
}

FixedPointProblem make_problem(const Data& d) {
  auto chol = std::make_shared<Eigen::LLT<MatrixXd>>(MatrixXd(d.X.transpose() * d.X));
  if (chol->info() != Eigen::Success)
    throw std::runtime_error("make_problem: design matrix is rank deficient");
  FixedPointProblem prob;
  prob.dim = d.p();
  prob.map = [&d, chol](const VectorXd& beta) -> VectorXd {
    const VectorXd u = conditional_mean(d, beta);
    const VectorXd rhs = blocked_accumulate(
        static_cast<std::size_t>(d.n()), VectorXd::Zero(d.p()).eval(),
        [&](std::size_t i, VectorXd& acc) {
          acc += d.X.row(static_cast<Eigen::Index>(i)).transpose() *
                 u(static_cast<Eigen::Index>(i));
        });
    return chol->solve(rhs);
  };
  prob.merit = [&d](const VectorXd& beta) { return loglik(d, beta); };
  return prob;
}

VectorXd default_start(const Data& d) { return VectorXd::Zero(d.p()); }

}  // namespace fpaccel::probit
