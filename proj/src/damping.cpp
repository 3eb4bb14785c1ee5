#include "fpaccel/damping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpaccel::damping {

namespace {
constexpr double kRankCutoffRel = 1e-12;
}

SvdFactors factor(const Eigen::MatrixXd& F, const Eigen::VectorXd& f) {
  if (F.rows() != f.size()) throw std::invalid_argument("factor: row mismatch");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(F, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactors fac;
  fac.d = svd.singularValues();
  fac.uf = svd.matrixU().transpose() * f;
  fac.v = svd.matrixV();
  const double cutoff = fac.d.size() > 0 ? kRankCutoffRel * fac.d(0) : 0.0;
  int r = 0;
  while (r < fac.d.size() && fac.d(r) > cutoff && fac.d(r) > 0.0) ++r;
  fac.rank = r;
  return fac;
}

double beta_ls_norm(const SvdFactors& fac) {
  double s2 = 0.0;
  for (int l = 0; l < fac.rank; ++l) {
    const double t = fac.uf(l) / fac.d(l);
    s2 += t * t;
  }
  return std::sqrt(s2);
}

Eigen::VectorXd ridge_gamma(const SvdFactors& fac, double lambda) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(fac.v.cols());
  for (int l = 0; l < fac.rank; ++l)
    w(l) = fac.d(l) * fac.uf(l) / (fac.d(l) * fac.d(l) + lambda);
  return fac.v * w;
}

double coefficient_norm(const SvdFactors& fac, double lambda) {
  double s2 = 0.0;
  for (int l = 0; l < fac.rank; ++l) {
    const double t = fac.d(l) * fac.uf(l) / (fac.d(l) * fac.d(l) + lambda);
    s2 += t * t;
  }
  return std::sqrt(s2);
}

void phi(const SvdFactors& fac, double lambda, double target, double& value, double& deriv) {
  const double norm = coefficient_norm(fac, lambda);
  value = norm - target;
  double acc = 0.0;
  for (int l = 0; l < fac.rank; ++l) {
    const double du = fac.d(l) * fac.uf(l);
    const double den = fac.d(l) * fac.d(l) + lambda;
    acc += du * du / (den * den * den);
  }
  deriv = norm > 0.0 ? -acc / norm : 0.0;
}

double shrink_target(double alpha, double kappa, double s) {
  return 1.0 / (1.0 + std::pow(alpha, kappa - s));
}

DampingResult find_lambda(const SvdFactors& fac, double delta, double l_stop, double u_stop,
                          const WarmStart& warm) {
  DampingResult res;
  res.delta = delta;
  const double bls = beta_ls_norm(fac);
  if (!(bls > 0.0)) throw std::invalid_argument("find_lambda: zero least-squares solution");

  // The undamped ratio is exactly 1; if the band reaches it, no damping.
  if (u_stop >= 1.0) return res;

  const double target = std::sqrt(delta) * bls;

  double val0, der0;
  phi(fac, 0.0, target, val0, der0);
  double L = der0 < 0.0 && std::isfinite(der0) ? -val0 / der0 : 0.0;
  double U = (fac.d.array() * fac.uf.array()).matrix().norm() / target;
  if (!std::isfinite(U) || U <= 0.0) U = std::max(1.0, 2.0 * L);
  L = std::min(L, U);

  const auto bracket_mid = [&] { return std::max(1e-3 * U, std::sqrt(L) * std::sqrt(U)); };

  double lambda = warm.valid ? warm.lambda - warm.residual / target : bracket_mid();
  if (!(lambda > L && lambda < U) || !std::isfinite(lambda)) lambda = bracket_mid();

  for (int t = 1; t <= 50; ++t) {
    double val, der;
    phi(fac, lambda, target, val, der);
    const double norm_here = val + target;
    res.iterations = t;
    const double ratio = norm_here / bls;
    if (ratio >= l_stop && ratio <= u_stop) {
      res.lambda = lambda;
      res.residual = norm_here * val / der;
      return res;
    }
    if (val < 0.0) U = lambda;
    L = std::max(L, lambda - val / der);  // Newton is a lower bound: phi is convex decreasing
    double next = lambda - (norm_here / target) * (val / der);
    if (!(next > L && next < U) || !std::isfinite(next)) next = bracket_mid();
    lambda = next;
  }

  res.bracket_fallback = true;
  res.lambda = bracket_mid();
  double val, der;
  phi(fac, res.lambda, target, val, der);
  res.residual = (val + target) * val / der;
  return res;
}

DampingResult find_lambda_scheduled(const SvdFactors& fac, double alpha, double kappa, long s,
                          const WarmStart& warm) {
  const double sd = static_cast<double>(s);
  const double delta = shrink_target(alpha, kappa, sd);
  const double l_stop = 1.0 / std::sqrt(1.0 + std::pow(alpha, kappa - sd + 0.5));
  const double u_stop = 1.0 / std::sqrt(1.0 + std::pow(alpha, kappa - sd - 0.5));
  return find_lambda(fac, delta, l_stop, u_stop, warm);
}

}  // namespace fpaccel::damping
