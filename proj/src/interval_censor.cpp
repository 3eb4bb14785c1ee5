#include "fpaccel/problems/interval_censor.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fpaccel/parallel.hpp"
#include "fpaccel/rng.hpp"

namespace fpaccel::icens {

namespace {

// cumulative cell masses: pre(j) = theta_0 + ... + theta_{j-1}
VectorXd prefix_masses(const VectorXd& theta) {
  VectorXd pre(theta.size() + 1);
  pre(0) = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) pre(j + 1) = pre(j) + theta(j);
  return pre;
}

double row_mass(const Data& d, const VectorXd& pre, Eigen::Index i) {
  const auto ii = static_cast<std::size_t>(i);
  return pre(d.hi[ii] + 1) - pre(d.lo[ii]);
}

}  // namespace

Data generate(int n, std::uint64_t seed, std::uint64_t stream) {
  if (n < 1) throw std::invalid_argument("generate: bad sample size");
  rng::Stream rs(seed, stream);
  Data d;
  d.seed = seed;
  d.L.resize(n);
  d.R.resize(n);
  std::set<double> endpoints{0.0};
  bool unbounded = false;
  for (int i = 0; i < n; ++i) {
    const double x = rs.weibull(3.0, 5.0);
    const int m = rs.poisson(5.0);
    double lo = 0.0, hi = kInf;
    for (int j = 0; j < m; ++j) {
      const double e = std::floor(rs.uniform(0.0, 500.0)) / 50.0;
      if (e < x) lo = std::max(lo, e);
      else if (e > x) hi = std::min(hi, e);
    }
    d.L(i) = lo;
    d.R(i) = hi;
    endpoints.insert(lo);
    if (std::isfinite(hi)) endpoints.insert(hi);
    else unbounded = true;
  }
  if (unbounded) endpoints.insert(kInf);

  d.grid.resize(static_cast<Eigen::Index>(endpoints.size()));
  Eigen::Index k = 0;
  for (double e : endpoints) d.grid(k++) = e;

  const Eigen::Index p = d.p();
  d.lo.resize(static_cast<std::size_t>(n));
  d.hi.resize(static_cast<std::size_t>(n));
  const double* gb = d.grid.data();
  for (int i = 0; i < n; ++i) {
    // first cell whose left end reaches L, last cell whose right end stays <= R
    const auto lo_it = std::lower_bound(gb, gb + p, d.L(i));
    const auto hi_it = std::upper_bound(gb + 1, gb + p + 1, d.R(i));
    d.lo[static_cast<std::size_t>(i)] = static_cast<int>(lo_it - gb);
    d.hi[static_cast<std::size_t>(i)] = static_cast<int>(hi_it - gb) - 2;
    if (d.lo[i] > d.hi[i] || d.hi[i] >= p)
      throw std::logic_error("generate: empty compatibility range");
  }
  return d;
}

VectorXd em_map(const Data& d, const VectorXd& theta) {
  const Eigen::Index n = d.n(), p = d.p();
  if (theta.size() != p) throw std::invalid_argument("em_map: bad theta length");
  const VectorXd pre = prefix_masses(theta);

  // per-block difference arrays keep the reduction order fixed
  const std::size_t nb = n_blocks(static_cast<std::size_t>(n));
  MatrixXd diffs = MatrixXd::Zero(p + 1, static_cast<Eigen::Index>(nb));
  bool bad = false;
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < static_cast<long long>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t hi = std::min(lo + kReduceBlock, static_cast<std::size_t>(n));
    auto col = diffs.col(static_cast<Eigen::Index>(b));
    for (std::size_t i = lo; i < hi; ++i) {
      const double mass = row_mass(d, pre, static_cast<Eigen::Index>(i));
      if (!(mass > 0.0)) {
        bad = true;
        continue;
      }
      const double t = 1.0 / mass;
      col(d.lo[i]) += t;
      col(d.hi[i] + 1) -= t;
    }
  }
  if (bad) throw ZeroRowMass("em_map: an observation's range carries no mass");

  VectorXd coverage = VectorXd::Zero(p + 1);
  for (Eigen::Index b = 0; b < diffs.cols(); ++b) coverage += diffs.col(b);

  VectorXd next(p);
  double running = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    running += coverage(j);
    next(j) = theta(j) * running / static_cast<double>(n);
  }
  next /= next.sum();  // exact simplex closure against rounding drift
  return next;
}

double loglik(const Data& d, const VectorXd& theta) {
  if (theta.size() != d.p()) throw std::invalid_argument("loglik: bad theta length");
  const VectorXd pre = prefix_masses(theta);
  return blocked_sum(static_cast<std::size_t>(d.n()), [&](std::size_t i) {
    const double mass = row_mass(d, pre, static_cast<Eigen::Index>(i));
    if (!(mass > 0.0)) return -kInf;
    return std::log(mass);
  });
}

VectorXd em_map_serial(const Data& d, const VectorXd& theta) {
  const Eigen::Index n = d.n(), p = d.p();
  if (theta.size() != p) throw std::invalid_argument("em_map_serial: bad theta length");
  VectorXd next = VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mass = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
      if (d.compatible(i, j)) mass += theta(j);
    if (!(mass > 0.0)) throw ZeroRowMass("em_map_serial: empty row mass");
    for (Eigen::Index j = 0; j < p; ++j)
      if (d.compatible(i, j)) next(j) += theta(j) / mass;
  }
  next /= static_cast<double>(n);
  next /= next.sum();
  return next;
}

double loglik_serial(const Data& d, const VectorXd& theta) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    double mass = 0.0;
    for (Eigen::Index j = 0; j < d.p(); ++j)
      if (d.compatible(i, j)) mass += theta(j);
    if (!(mass > 0.0)) return -kInf;
    acc += std::log(mass);
  }
  return acc;
}

FixedPointProblem make_problem(const Data& d) {
  FixedPointProblem prob;
  prob.dim = d.p();
  prob.map = [&d](const VectorXd& theta) -> VectorXd { return em_map(d, theta); };
  prob.merit = [&d](const VectorXd& theta) -> double { return loglik(d, theta); };
  prob.feasible = [&d](const VectorXd& theta) -> bool {
    if (!theta.allFinite() || (theta.array() < 0.0).any()) return false;
    const VectorXd pre = prefix_masses(theta);
    for (Eigen::Index i = 0; i < d.n(); ++i)
      if (!(row_mass(d, pre, i) > 0.0)) return false;
    return true;
  };
  return prob;
}

VectorXd default_start(const Data& d) {
  return VectorXd::Constant(d.p(), 1.0 / static_cast<double>(d.p()));
}

}  // namespace fpaccel::icens
