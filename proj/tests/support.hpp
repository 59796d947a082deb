#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "homlab/matrix.hpp"
#include "homlab/tables.hpp"

namespace homlab::testing {

/// Integer uniform on [lo, hi] without relying on distribution internals.
inline long uniform_int(std::mt19937_64& rng, long lo, long hi) {
  return lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Matrix random_integer_matrix(std::mt19937_64& rng, std::size_t n, std::size_t m, long lo, long hi) {
  Matrix out(n, m);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out(r, c) = static_cast<double>(uniform_int(rng, lo, hi));
  return out;
}

inline double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(1.0, std::fabs(want));
}

inline double max_rel_marginal_error(const ContingencyTable& t, const Marginals& target) {
  auto m = marginals(t);
  double worst = 0.0;
  for (std::size_t r = 0; r < m.row_sums.size(); ++r) worst = std::max(worst, rel_err(m.row_sums[r], target.row_sums[r]));
  for (std::size_t c = 0; c < m.col_sums.size(); ++c) worst = std::max(worst, rel_err(m.col_sums[c], target.col_sums[c]));
  return worst;
}

}  // namespace homlab::testing
