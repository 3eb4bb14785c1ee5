#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace fpaccel {

// Reductions used by the parallel kernels. Work is split into fixed-size
// blocks reduced independently, then joined serially in block order, so the
// floating-point result is bit-identical for any thread count (including 1)
// and matches nothing but itself: the serial reference implementations next
// to each kernel provide the independent check.
inline constexpr std::size_t kReduceBlock = 256;

inline std::size_t n_blocks(std::size_t n) {
  return (n + kReduceBlock - 1) / kReduceBlock;
}

template <class Term>
double blocked_sum(std::size_t n, Term&& term) {
  if (n == 0) return 0.0;
  const std::size_t nb = n_blocks(n);
  std::vector<double> partial(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < static_cast<long long>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t hi = std::min(lo + kReduceBlock, n);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

// Vector/matrix version: fn(i, acc) adds row i's contribution into acc.
// zero provides the shape (e.g. VectorXd::Zero(p)).
template <class Acc, class Fn>
Acc blocked_accumulate(std::size_t n, const Acc& zero, Fn&& fn) {
  const std::size_t nb = n_blocks(std::max<std::size_t>(n, 1));
  std::vector<Acc> partial(nb, zero);
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < static_cast<long long>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t hi = std::min(lo + kReduceBlock, n);
    Acc acc = zero;
    for (std::size_t i = lo; i < hi; ++i) fn(i, acc);
    partial[static_cast<std::size_t>(b)] = std::move(acc);
  }
  Acc total = zero;
  for (const Acc& a : partial) total += a;
  return total;
}

}  // namespace fpaccel
