#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fpaccel/types.hpp"

namespace fpaccel::icens {

// Nonparametric estimation of an event-time distribution from interval
// censoring: each observation confines the event to (L_i, R_i], and the
// estimate places probability theta_j on the cells of the grid formed by all
// interval endpoints. Cell j spans (grid[j], grid[j+1]]; because endpoints
// come from the pooled L and R values, the cells compatible with a given
// observation are always a contiguous index range [lo_i, hi_i].

struct Data {
  VectorXd grid;        // p + 1 increasing endpoints, grid[0] = 0, last may be +inf
  std::vector<int> lo;  // first compatible cell per observation
  std::vector<int> hi;  // last compatible cell per observation (inclusive)
  VectorXd L, R;        // raw observation bounds; R may be +inf
  std::uint64_t seed = 0;

  Eigen::Index n() const { return static_cast<Eigen::Index>(lo.size()); }
  Eigen::Index p() const { return grid.size() - 1; }
  bool compatible(Eigen::Index i, Eigen::Index j) const {
    return j >= lo[static_cast<std::size_t>(i)] && j <= hi[static_cast<std::size_t>(i)];
  }
};

struct ZeroRowMass : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Event times Weibull(3, 5); a Poisson(5) number of inspection times per
// subject drawn from the lattice {0, 0.02, ..., 9.98}; L_i / R_i are the
// tightest inspections bracketing the event (0 and +inf when unbounded).
Data generate(int n, std::uint64_t seed, std::uint64_t stream = 0);

// Multiplicative mass reallocation; output renormalized onto the simplex.
// Throws ZeroRowMass if an observation's compatible range carries no mass.
VectorXd em_map(const Data& d, const VectorXd& theta);

// sum_i log(mass on row i's range); -inf on an empty row, no throw.
double loglik(const Data& d, const VectorXd& theta);

VectorXd em_map_serial(const Data& d, const VectorXd& theta);
double loglik_serial(const Data& d, const VectorXd& theta);

// d must outlive the returned problem. feasible() requires nonnegative cell
// masses and positive mass on every observation's range.
FixedPointProblem make_problem(const Data& d);
VectorXd default_start(const Data& d);  // uniform over cells

}  // namespace fpaccel::icens
