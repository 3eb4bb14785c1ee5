#include "fpaccel/problems/mvt.hpp"

#include <cmath>

#include "fpaccel/parallel.hpp"
#include "fpaccel/rng.hpp"

namespace fpaccel::mvt {

namespace {

constexpr double kLogPi = 1.1447298858494001741;

struct Weighted {
  VectorXd w;       // (nu + q) / (nu + d_i)
  double w_sum = 0.0;
  VectorXd wy_sum;  // sum_i w_i y_i
};

Weighted weights(const Data& d, const Params& p, const Eigen::LLT<MatrixXd>& chol) {
  const Eigen::Index n = d.n(), q = d.q();
  Weighted out;
  out.w.resize(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd r = d.Y.row(i).transpose() - p.mu;
    const double dist = r.dot(chol.solve(r));
    out.w(i) = (d.nu + static_cast<double>(q)) / (d.nu + dist);
  }
  out.w_sum = blocked_sum(static_cast<std::size_t>(n),
                          [&](std::size_t i) { return out.w(static_cast<Eigen::Index>(i)); });
  out.wy_sum = blocked_accumulate(
      static_cast<std::size_t>(n), VectorXd::Zero(q).eval(), [&](std::size_t i, VectorXd& acc) {
        const auto ii = static_cast<Eigen::Index>(i);
        acc += out.w(ii) * d.Y.row(ii).transpose();
      });
  return out;
}

Params reweighted_update(const Data& d, const Params& p, bool expanded) {
  Eigen::LLT<MatrixXd> chol(p.sigma);
  if (chol.info() != Eigen::Success)
    throw SigmaNotPD("reweighted update: scatter is not positive definite");
  const Eigen::Index n = d.n(), q = d.q();
  const Weighted ws = weights(d, p, chol);

  Params out;
  out.mu = ws.wy_sum / ws.w_sum;
  const MatrixXd scatter = blocked_accumulate(
      static_cast<std::size_t>(n), MatrixXd::Zero(q, q).eval(),
      [&](std::size_t i, MatrixXd& acc) {
        const auto ii = static_cast<Eigen::Index>(i);
        const VectorXd r = d.Y.row(ii).transpose() - out.mu;
        acc += ws.w(ii) * (r * r.transpose());
      });
  out.sigma = scatter / (expanded ? ws.w_sum : static_cast<double>(n));
  return out;
}

Params reweighted_update_serial(const Data& d, const Params& p, bool expanded) {
  Eigen::LLT<MatrixXd> chol(p.sigma);
  if (chol.info() != Eigen::Success)
    throw SigmaNotPD("reweighted update: scatter is not positive definite");
  const Eigen::Index n = d.n(), q = d.q();
  VectorXd w(n);
  double w_sum = 0.0;
  VectorXd wy = VectorXd::Zero(q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd r = d.Y.row(i).transpose() - p.mu;
    w(i) = (d.nu + static_cast<double>(q)) / (d.nu + r.dot(chol.solve(r)));
    w_sum += w(i);
    wy += w(i) * d.Y.row(i).transpose();
  }
  Params out;
  out.mu = wy / w_sum;
  MatrixXd scatter = MatrixXd::Zero(q, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd r = d.Y.row(i).transpose() - out.mu;
    scatter += w(i) * (r * r.transpose());
  }
  out.sigma = scatter / (expanded ? w_sum : static_cast<double>(n));
  return out;
}

double loglik_impl(const Data& d, const Params& p, bool blocked) {
  Eigen::LLT<MatrixXd> chol(p.sigma);
  if (chol.info() != Eigen::Success) throw SigmaNotPD("loglik: scatter is not positive definite");
  const Eigen::Index n = d.n(), q = d.q();
  const double qd = static_cast<double>(q);
  const double logdet = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
  const double cst = std::lgamma(0.5 * (d.nu + qd)) - std::lgamma(0.5 * d.nu) -
                     0.5 * qd * (std::log(d.nu) + kLogPi) - 0.5 * logdet;
  const auto term = [&](std::size_t i) {
    const VectorXd r = d.Y.row(static_cast<Eigen::Index>(i)).transpose() - p.mu;
    return -0.5 * (d.nu + qd) * std::log1p(r.dot(chol.solve(r)) / d.nu);
  };
  double acc = 0.0;
  if (blocked) {
    acc = blocked_sum(static_cast<std::size_t>(n), term);
  } else {
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) acc += term(i);
  }
  return acc + cst * static_cast<double>(n);
}

}  // namespace

Data generate(int n, int q, double nu, std::uint64_t seed, std::uint64_t stream) {
  if (n < 1 || q < 1 || !(nu > 0)) throw std::invalid_argument("generate: bad arguments");
  rng::Stream rs(seed, stream);
  Data d;
  d.nu = nu;
  d.seed = seed;
  MatrixXd V(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) V(i, j) = rs.normal();
  d.sigma_true = V * V.transpose();
  d.mu_true = VectorXd::Zero(q);
  d.Y.resize(n, q);
  VectorXd z(q);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < q; ++j) z(j) = rs.normal();
    const double u = rs.chi_squared(nu);
    d.Y.row(i) = (V * z / std::sqrt(u / nu)).transpose();
  }
  return d;
}

Params em_map(const Data& d, const Params& p) { return reweighted_update(d, p, false); }
Params px_em_map(const Data& d, const Params& p) { return reweighted_update(d, p, true); }
double loglik(const Data& d, const Params& p) { return loglik_impl(d, p, true); }

Params em_map_serial(const Data& d, const Params& p) {
  return reweighted_update_serial(d, p, false);
}
Params px_em_map_serial(const Data& d, const Params& p) {
  return reweighted_update_serial(d, p, true);
}
double loglik_serial(const Data& d, const Params& p) { return loglik_impl(d, p, false); }

Eigen::Index packed_dim(Eigen::Index q, Packing packing) {
  return packing == Packing::LowerTriangle ? q + q * (q + 1) / 2 : q + q * q;
}

VectorXd pack(const Params& p, Packing packing) {
  const Eigen::Index q = p.mu.size();
  VectorXd v(packed_dim(q, packing));
  v.head(q) = p.mu;
  Eigen::Index k = q;
  if (packing == Packing::LowerTriangle) {
    for (Eigen::Index j = 0; j < q; ++j)
      for (Eigen::Index i = j; i < q; ++i) v(k++) = p.sigma(i, j);
  } else {
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = 0; j < q; ++j) v(k++) = p.sigma(i, j);
  }
  return v;
}

Params unpack(const VectorXd& v, Eigen::Index q, Packing packing) {
  if (v.size() != packed_dim(q, packing)) throw std::invalid_argument("unpack: bad length");
  Params p;
  p.mu = v.head(q);
  p.sigma.resize(q, q);
  Eigen::Index k = q;
  if (packing == Packing::LowerTriangle) {
    for (Eigen::Index j = 0; j < q; ++j)
      for (Eigen::Index i = j; i < q; ++i) {
        p.sigma(i, j) = v(k);
        p.sigma(j, i) = v(k);
        ++k;
      }
  } else {
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = 0; j < q; ++j) p.sigma(i, j) = v(k++);
    p.sigma = ((p.sigma + p.sigma.transpose()) / 2.0).eval();
  }
  return p;
}

FixedPointProblem make_problem(const Data& d, bool parameter_expanded, Packing packing) {
  const Eigen::Index q = d.q();
  FixedPointProblem prob;
  prob.dim = packed_dim(q, packing);
  prob.map = [&d, q, packing, parameter_expanded](const VectorXd& v) -> VectorXd {
    const Params p = unpack(v, q, packing);
    return pack(parameter_expanded ? px_em_map(d, p) : em_map(d, p), packing);
  };
  prob.merit = [&d, q, packing](const VectorXd& v) -> double {
    const Params p = unpack(v, q, packing);
    const Eigen::LLT<MatrixXd> chol(p.sigma);
    if (chol.info() != Eigen::Success) return -kInf;
    return loglik(d, p);
  };
  prob.feasible = [q, packing](const VectorXd& v) -> bool {
    if (!v.allFinite()) return false;
    const Params p = unpack(v, q, packing);
    return Eigen::LLT<MatrixXd>(p.sigma).info() == Eigen::Success;
  };
  return prob;
}

VectorXd default_start(const Data& d, Packing packing) {
  const Eigen::Index n = d.n(), q = d.q();
  Params p;
  p.mu = d.Y.colwise().mean().transpose();
  const MatrixXd centered = d.Y.rowwise() - p.mu.transpose();
  p.sigma = centered.transpose() * centered / static_cast<double>(n - 1) +
            1e-3 * MatrixXd::Identity(q, q);
  return pack(p, packing);
}

}  // namespace fpaccel::mvt
