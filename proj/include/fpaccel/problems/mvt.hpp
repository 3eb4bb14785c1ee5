#pragma once

#include <cstdint>
#include <stdexcept>

#include "fpaccel/types.hpp"

namespace fpaccel::mvt {

// Location/scatter estimation for the multivariate Student-t with known
// degrees of freedom, via iteratively reweighted moments. The
// parameter-expanded variant rescales the scatter update by the total weight
// instead of the sample size.

struct Data {
  MatrixXd Y;  // n x q observations
  double nu = 1.0;
  VectorXd mu_true;
  MatrixXd sigma_true;
  std::uint64_t seed = 0;

  Eigen::Index n() const { return Y.rows(); }
  Eigen::Index q() const { return Y.cols(); }
};

struct Params {
  VectorXd mu;
  MatrixXd sigma;
};

struct SigmaNotPD : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scatter VV' with V a q x q standard normal draw; observations
// y_i = V z_i / sqrt(u_i / nu) with z_i standard normal and u_i chi-squared.
Data generate(int n, int q, double nu, std::uint64_t seed, std::uint64_t stream = 0);

Params em_map(const Data& d, const Params& p);     // scatter scaled by 1/n
Params px_em_map(const Data& d, const Params& p);  // scatter scaled by 1/sum(w)
double loglik(const Data& d, const Params& p);     // throws SigmaNotPD

Params em_map_serial(const Data& d, const Params& p);
Params px_em_map_serial(const Data& d, const Params& p);
double loglik_serial(const Data& d, const Params& p);

// Flat parameter vector for the solvers: mu first, then the scatter, either
// as its lower triangle (column-major, the default: q + q(q+1)/2 entries) or
// the full square (q + q^2 entries, symmetrized on unpack).
enum class Packing { LowerTriangle, Full };

Eigen::Index packed_dim(Eigen::Index q, Packing packing);
VectorXd pack(const Params& p, Packing packing);
Params unpack(const VectorXd& v, Eigen::Index q, Packing packing);

// d must outlive the returned problem. feasible() accepts vectors whose
// scatter factorizes; merit returns -inf instead of throwing on the boundary.
FixedPointProblem make_problem(const Data& d, bool parameter_expanded,
                               Packing packing = Packing::LowerTriangle);

// sample mean and ridged sample covariance
VectorXd default_start(const Data& d, Packing packing = Packing::LowerTriangle);

}  // namespace fpaccel::mvt
