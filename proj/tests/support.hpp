#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"

#include "linpred/error.hpp"
#include "linpred/grid.hpp"

namespace testing {

using linpred::cplx;

inline const cplx I{0.0, 1.0};

inline std::vector<cplx> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<cplx> v(n);
  for (auto &z : v) {
    z = {nd(rng), nd(rng)};
  }
  return v;
}

template <class F> linpred::ErrorCode code_of(F &&f) {
  try {
    f();
  } catch (const linpred::Error &e) {
    return e.code();
  }
  FAIL("expected an error");
  return linpred::ErrorCode::InvalidArgument;
}

inline double rel_err(const std::vector<cplx> &a, const std::vector<cplx> &b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

inline double max_err(const std::vector<cplx> &a, const std::vector<cplx> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

} // namespace testing
