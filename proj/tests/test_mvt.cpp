#include <doctest.h>

#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fpaccel/engine.hpp"
#include "fpaccel/problems/dataset_io.hpp"
#include "fpaccel/problems/mvt.hpp"
#include "oracles.hpp"

using namespace fpaccel;

namespace {

mvt::Data tiny_scalar_data() {
  mvt::Data d;
  d.Y.resize(3, 1);
  d.Y << -1.0, 0.5, 2.0;
  d.nu = 1.5;
  return d;
}

// scalar t log-density summed with plain arithmetic
double scalar_loglik(const mvt::Data& d, double mu, double s2) {
  const double nu = d.nu;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double z2 = (d.Y(i, 0) - mu) * (d.Y(i, 0) - mu) / s2;
    acc += std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * 3.14159265358979323846 * s2) -
           0.5 * (nu + 1.0) * std::log1p(z2 / nu);
  }
  return acc;
}

// the expanded update converges fast even at nu = 1, so it makes a cheap
// reference for the common fixed point
mvt::Params px_fixed_point(const mvt::Data& d) {
  mvt::Params p = mvt::unpack(mvt::default_start(d), d.q(), mvt::Packing::LowerTriangle);
  for (int it = 0; it < 5000; ++it) {
    const mvt::Params next = mvt::px_em_map(d, p);
    const double move = (next.mu - p.mu).norm() + (next.sigma - p.sigma).norm();
    p = next;
    if (move < 1e-14) break;
  }
  return p;
}

}  // namespace

TEST_SUITE("mvt") {

TEST_CASE("scalar case matches hand-rolled weighted updates") {
  const auto d = tiny_scalar_data();
  const double mu = 0.2, s2 = 0.8, nu = d.nu;
  double w[3], wsum = 0.0, wy = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double r2 = (d.Y(i, 0) - mu) * (d.Y(i, 0) - mu) / s2;
    w[i] = (nu + 1.0) / (nu + r2);
    wsum += w[i];
    wy += w[i] * d.Y(i, 0);
  }
  const double mu_next = wy / wsum;
  double scatter = 0.0;
  for (int i = 0; i < 3; ++i) scatter += w[i] * (d.Y(i, 0) - mu_next) * (d.Y(i, 0) - mu_next);

  mvt::Params p;
  p.mu = VectorXd::Constant(1, mu);
  p.sigma = MatrixXd::Constant(1, 1, s2);
  const auto em = mvt::em_map(d, p);
  const auto px = mvt::px_em_map(d, p);
  CHECK(em.mu(0) == doctest::Approx(mu_next).epsilon(1e-14));
  CHECK(em.sigma(0, 0) == doctest::Approx(scatter / 3.0).epsilon(1e-14));
  CHECK(px.mu(0) == doctest::Approx(mu_next).epsilon(1e-14));
  CHECK(px.sigma(0, 0) == doctest::Approx(scatter / wsum).epsilon(1e-14));
  CHECK(mvt::loglik(d, p) == doctest::Approx(scalar_loglik(d, mu, s2)).epsilon(1e-13));
}

TEST_CASE("location gradient of the log-likelihood equals the weighted score") {
  const auto d = mvt::generate(60, 3, 2.5, 31u);
  mvt::Params p;
  p.mu = VectorXd::Constant(3, 0.3);
  p.sigma = MatrixXd::Identity(3, 3) * 1.4;

  // analytic: sum_i w_i Sigma^{-1} (y_i - mu)
  VectorXd score = VectorXd::Zero(3);
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const VectorXd r = d.Y.row(i).transpose() - p.mu;
    const double w = (d.nu + 3.0) / (d.nu + r.dot(p.sigma.llt().solve(r)));
    score += w * p.sigma.llt().solve(r);
  }
  for (int j = 0; j < 3; ++j) {
    const double fd = oracle::central_diff(
        [&](double t) {
          mvt::Params q = p;
          q.mu(j) = t;
          return mvt::loglik_serial(d, q);
        },
        p.mu(j), 1e-6);
    CHECK(fd == doctest::Approx(score(j)).epsilon(1e-6));
  }
}

TEST_CASE("both update variants increase the likelihood") {
  const auto d = mvt::generate(80, 3, 1.0, 7u);
  for (bool expanded : {false, true}) {
    mvt::Params p = mvt::unpack(mvt::default_start(d), 3, mvt::Packing::LowerTriangle);
    double prev = mvt::loglik(d, p);
    for (int it = 0; it < 40; ++it) {
      p = expanded ? mvt::px_em_map(d, p) : mvt::em_map(d, p);
      const double cur = mvt::loglik(d, p);
      CHECK(cur >= prev - 1e-10);
      prev = cur;
    }
  }
}

TEST_CASE("plain and parameter-expanded updates share a fixed point") {
  const auto d = mvt::generate(70, 2, 1.0, 13u);
  const auto px = px_fixed_point(d);
  // at the maximizer the weights sum to n, so both scalings coincide there
  const auto em_once = mvt::em_map(d, px);
  CHECK((em_once.mu - px.mu).norm() < 1e-8 * (1.0 + px.mu.norm()));
  CHECK((em_once.sigma - px.sigma).norm() < 1e-8 * (1.0 + px.sigma.norm()));

  SolverConfig cfg;
  cfg.tol = 1e-12;
  const auto rep = solve_daarem(mvt::make_problem(d, false), mvt::default_start(d), cfg);
  CHECK(rep.converged);
  const VectorXd target = mvt::pack(px, mvt::Packing::LowerTriangle);
  CHECK((rep.x - target).norm() < 1e-6 * (1.0 + target.norm()));
  CHECK(mvt::loglik(d, px) == doctest::Approx(*rep.merit_final).epsilon(1e-9));
}

TEST_CASE("packing round-trips and has the advertised sizes") {
  CHECK(mvt::packed_dim(5, mvt::Packing::LowerTriangle) == 20);
  CHECK(mvt::packed_dim(25, mvt::Packing::LowerTriangle) == 350);
  CHECK(mvt::packed_dim(25, mvt::Packing::Full) == 650);

  rng::Stream s(3, 0);
  const MatrixXd A = oracle::random_matrix(s, 4, 4);
  mvt::Params p;
  p.mu = oracle::random_vector(s, 4);
  p.sigma = A * A.transpose() + MatrixXd::Identity(4, 4);
  for (auto packing : {mvt::Packing::LowerTriangle, mvt::Packing::Full}) {
    const VectorXd v = mvt::pack(p, packing);
    CHECK(v.size() == mvt::packed_dim(4, packing));
    const auto back = mvt::unpack(v, 4, packing);
    CHECK(back.mu == p.mu);
    CHECK(back.sigma == p.sigma);
  }
  CHECK_THROWS_AS(mvt::unpack(VectorXd::Zero(7), 4, mvt::Packing::Full),
                  std::invalid_argument);

  // the full packing symmetrizes what it reads back
  VectorXd v = mvt::pack(p, mvt::Packing::Full);
  v(4 + 1) += 0.2;  // sigma(0,1) only
  const auto skew = mvt::unpack(v, 4, mvt::Packing::Full);
  CHECK(skew.sigma(0, 1) == skew.sigma(1, 0));
  CHECK(skew.sigma(0, 1) == doctest::Approx(p.sigma(0, 1) + 0.1));
}

TEST_CASE("blocked updates match the serial reference") {
  const auto d = mvt::generate(90, 4, 2.0, 19u);
  mvt::Params p = mvt::unpack(mvt::default_start(d), 4, mvt::Packing::LowerTriangle);
  for (int it = 0; it < 3; ++it) {
    const auto a = mvt::em_map(d, p);
    const auto b = mvt::em_map_serial(d, p);
    CHECK((a.mu - b.mu).norm() <= 1e-12 * (1.0 + b.mu.norm()));
    CHECK((a.sigma - b.sigma).norm() <= 1e-12 * (1.0 + b.sigma.norm()));
    CHECK(mvt::loglik(d, p) ==
          doctest::Approx(mvt::loglik_serial(d, p)).epsilon(1e-12));
    p = a;
  }
}

#ifdef _OPENMP
TEST_CASE("updates are bit-identical across thread counts") {
  const auto d = mvt::generate(100, 3, 1.0, 29u);
  const mvt::Params p = mvt::unpack(mvt::default_start(d), 3, mvt::Packing::LowerTriangle);
  omp_set_num_threads(1);
  const auto a = mvt::em_map(d, p);
  const double la = mvt::loglik(d, p);
  omp_set_num_threads(4);
  const auto b = mvt::em_map(d, p);
  const double lb = mvt::loglik(d, p);
  CHECK(a.mu == b.mu);
  CHECK(a.sigma == b.sigma);
  CHECK(la == lb);
}
#endif

TEST_CASE("non-positive-definite scatter is rejected") {
  const auto d = mvt::generate(40, 2, 1.0, 43u);
  mvt::Params bad;
  bad.mu = VectorXd::Zero(2);
  bad.sigma = -MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(mvt::loglik(d, bad), mvt::SigmaNotPD);
  CHECK_THROWS_AS(mvt::em_map(d, bad), mvt::SigmaNotPD);

  const auto prob = mvt::make_problem(d, false);
  const VectorXd v = mvt::pack(bad, mvt::Packing::LowerTriangle);
  CHECK(prob.merit(v) == -kInf);
  CHECK_FALSE(prob.feasible(v));
  CHECK(prob.feasible(mvt::default_start(d)));
}

TEST_CASE("the full packing reaches the same fixed point as the triangle") {
  const auto d = mvt::generate(60, 2, 1.0, 51u);
  SolverConfig cfg;
  cfg.tol = 1e-10;
  const auto rep =
      solve_daarem(mvt::make_problem(d, false, mvt::Packing::Full),
                   mvt::default_start(d, mvt::Packing::Full), cfg);
  CHECK(rep.converged);
  const VectorXd target = mvt::pack(px_fixed_point(d), mvt::Packing::Full);
  CHECK((rep.x - target).norm() < 1e-5 * (1.0 + target.norm()));
}

TEST_CASE("generator is reproducible with roughly correct moments") {
  const auto d1 = mvt::generate(4000, 2, 10.0, 61u, 0);
  const auto d2 = mvt::generate(4000, 2, 10.0, 61u, 0);
  CHECK(d1.Y == d2.Y);
  CHECK(d1.sigma_true == d2.sigma_true);
  CHECK(mvt::generate(4000, 2, 10.0, 61u, 1).Y != d1.Y);

  // for nu = 10: E[y] = 0, Cov[y] = Sigma * nu / (nu - 2)
  const VectorXd mean = d1.Y.colwise().mean().transpose();
  const MatrixXd centered = d1.Y.rowwise() - mean.transpose();
  const MatrixXd cov = centered.transpose() * centered / 3999.0;
  const MatrixXd expect = d1.sigma_true * (10.0 / 8.0);
  CHECK(mean.norm() < 0.15 * std::sqrt(expect(0, 0) + expect(1, 1)));
  CHECK((cov - expect).norm() < 0.25 * expect.norm());
}

TEST_CASE("datasets round-trip through the text format") {
  const auto d = mvt::generate(50, 3, 1.0, 97u);
  std::stringstream ss;
  dataio::dump(ss, d);
  CHECK(dataio::peek_kind(ss) == "mvt");
  const auto back = dataio::load_mvt(ss);
  CHECK(back.Y == d.Y);
  CHECK(back.nu == d.nu);
  CHECK(back.mu_true == d.mu_true);
  CHECK(back.sigma_true == d.sigma_true);
  CHECK(back.seed == d.seed);
}

}  // TEST_SUITE
