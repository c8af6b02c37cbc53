#pragma once

// Data-parallel inner loops shared by the fitting and reconstruction code.
// Each kernel exists twice: a plain serial reference and an OpenMP version.
// The two must agree to rounding; tests and the benchmark compare them.
//
// Layout: a channel stack is q_count contiguous planes of s0 * s1 samples
// (row-major, axis 0 slowest). Tap arrays are q_count contiguous windows of
// span0 * span1 taps. Valid output index (i0, i1) corresponds to grid index
// (n_min0 + P0 + i0, n_min1 + P1 + i1), so sample n - k of a valid output
// sits at plane offset (i0 + P0 - k0) * s1 + (i1 + P1 - k1).

#include <span>

#include "linpred/grid.hpp"

namespace linpred::kernels {

struct Geometry {
  int s0 = 1, s1 = 1;
  Window win;

  static Geometry of(const KGrid &grid, const Window &w);

  int valid0() const { return s0 - win.L[0] - win.P[0]; }
  int valid1() const { return s1 - win.L[1] - win.P[1]; }
  std::size_t plane() const { return static_cast<std::size_t>(s0) * s1; }
  std::size_t valid() const {
    return valid0() <= 0 || valid1() <= 0
               ? 0
               : static_cast<std::size_t>(valid0()) * valid1();
  }
  std::size_t taps() const { return win.size(); }
};

namespace serial {

// out[v] = sum_q sum_k taps_q[k] x_q[v - k] over valid positions.
void annihilate(std::span<const cplx> x, int q_count, const Geometry &g,
                std::span<const cplx> taps, std::span<cplx> out);
// x_q[m] += sum_k conj(taps_q[k]) y[m + k]; adjoint of annihilate.
void annihilate_adjoint(std::span<const cplx> y, int q_count,
                        const Geometry &g, std::span<const cplx> taps,
                        std::span<cplx> x_accum);
// Row-major lifted matrix: rows = valid positions, cols = (q, k).
void lift(std::span<const cplx> x, int q_count, const Geometry &g,
          std::span<cplx> mat);
// x_q[v - k] += mat(v, (q, k)); adjoint of lift.
void unlift_accumulate(std::span<const cplx> mat, int q_count,
                       const Geometry &g, std::span<cplx> x_accum);

} // namespace serial

namespace omp {

void annihilate(std::span<const cplx> x, int q_count, const Geometry &g,
                std::span<const cplx> taps, std::span<cplx> out);
void annihilate_adjoint(std::span<const cplx> y, int q_count,
                        const Geometry &g, std::span<const cplx> taps,
                        std::span<cplx> x_accum);
void lift(std::span<const cplx> x, int q_count, const Geometry &g,
          std::span<cplx> mat);
void unlift_accumulate(std::span<const cplx> mat, int q_count,
                       const Geometry &g, std::span<cplx> x_accum);
int max_threads();

} // namespace omp

} // namespace linpred::kernels
