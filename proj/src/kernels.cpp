#include "linpred/kernels.hpp"

#include <omp.h>

#include "linpred/error.hpp"

namespace linpred::kernels {

Geometry Geometry::of(const KGrid &grid, const Window &w) {
  Geometry g;
  g.s0 = grid.axis(0).size();
  g.s1 = grid.axis(1).size();
  g.win = w;
  return g;
}

namespace {

void check_sizes(std::size_t x, std::size_t expect, const char *what) {
  require(x == expect, std::string("kernel buffer size mismatch: ") + what);
}

} // namespace

namespace serial {

void annihilate(std::span<const cplx> x, int q_count, const Geometry &g,
                std::span<const cplx> taps, std::span<cplx> out) {
  check_sizes(x.size(), g.plane() * q_count, "input");
  check_sizes(taps.size(), g.taps() * q_count, "taps");
  check_sizes(out.size(), g.valid(), "output");
  const int v0 = g.valid0(), v1 = g.valid1();
  const auto &w = g.win;
  for (int i0 = 0; i0 < v0; ++i0) {
    for (int i1 = 0; i1 < v1; ++i1) {
      cplx acc{};
      for (int q = 0; q < q_count; ++q) {
        const cplx *xq = x.data() + q * g.plane();
        const cplx *hq = taps.data() + q * g.taps();
        for (int k0 = -w.L[0]; k0 <= w.P[0]; ++k0) {
          for (int k1 = -w.L[1]; k1 <= w.P[1]; ++k1) {
            const auto src = static_cast<std::size_t>(i0 + w.P[0] - k0) * g.s1 +
                             (i1 + w.P[1] - k1);
            acc += hq[w.tap_index(k0, k1)] * xq[src];
          }
        }
      }
      out[static_cast<std::size_t>(i0) * v1 + i1] = acc;
    }
  }
}

void annihilate_adjoint(std::span<const cplx> y, int q_count,
                        const Geometry &g, std::span<const cplx> taps,
                        std::span<cplx> x_accum) {
  check_sizes(y.size(), g.valid(), "input");
  check_sizes(taps.size(), g.taps() * q_count, "taps");
  check_sizes(x_accum.size(), g.plane() * q_count, "output");
  const int v0 = g.valid0(), v1 = g.valid1();
  const auto &w = g.win;
  for (int i0 = 0; i0 < v0; ++i0) {
    for (int i1 = 0; i1 < v1; ++i1) {
      const cplx yv = y[static_cast<std::size_t>(i0) * v1 + i1];
      for (int q = 0; q < q_count; ++q) {
        cplx *xq = x_accum.data() + q * g.plane();
        const cplx *hq = taps.data() + q * g.taps();
        for (int k0 = -w.L[0]; k0 <= w.P[0]; ++k0) {
          for (int k1 = -w.L[1]; k1 <= w.P[1]; ++k1) {
            const auto dst = static_cast<std::size_t>(i0 + w.P[0] - k0) * g.s1 +
                             (i1 + w.P[1] - k1);
            xq[dst] += std::conj(hq[w.tap_index(k0, k1)]) * yv;
          }
        }
      }
    }
  }
}

void lift(std::span<const cplx> x, int q_count, const Geometry &g,
          std::span<cplx> mat) {
  check_sizes(x.size(), g.plane() * q_count, "input");
  const auto cols = g.taps() * q_count;
  check_sizes(mat.size(), g.valid() * cols, "matrix");
  const int v0 = g.valid0(), v1 = g.valid1();
  const auto &w = g.win;
  for (int i0 = 0; i0 < v0; ++i0) {
    for (int i1 = 0; i1 < v1; ++i1) {
      cplx *row = mat.data() + (static_cast<std::size_t>(i0) * v1 + i1) * cols;
      for (int q = 0; q < q_count; ++q) {
        const cplx *xq = x.data() + q * g.plane();
        for (int k0 = -w.L[0]; k0 <= w.P[0]; ++k0) {
          for (int k1 = -w.L[1]; k1 <= w.P[1]; ++k1) {
            const auto src = static_cast<std::size_t>(i0 + w.P[0] - k0) * g.s1 +
                             (i1 + w.P[1] - k1);
            row[q * g.taps() + w.tap_index(k0, k1)] = xq[src];
          }
        }
      }
    }
  }
}

void unlift_accumulate(std::span<const cplx> mat, int q_count,
                       const Geometry &g, std::span<cplx> x_accum) {
  const auto cols = g.taps() * q_count;
  check_sizes(mat.size(), g.valid() * cols, "matrix");
  check_sizes(x_accum.size(), g.plane() * q_count, "output");
  const int v0 = g.valid0(), v1 = g.valid1();
  const auto &w = g.win;
  for (int i0 = 0; i0 < v0; ++i0) {
    for (int i1 = 0; i1 < v1; ++i1) {
      const cplx *row =
          mat.data() + (static_cast<std::size_t>(i0) * v1 + i1) * cols;
      for (int q = 0; q < q_count; ++q) {
        cplx *xq = x_accum.data() + q * g.plane();
        for (int k0 = -w.L[0]; k0 <= w.P[0]; ++k0) {
          for (int k1 = -w.L[1]; k1 <= w.P[1]; ++k1) {
            const auto dst = static_cast<std::size_t>(i0 + w.P[0] - k0) * g.s1 +
                             (i1 + w.P[1] - k1);
            xq[dst] += row[q * g.taps() + w.tap_index(k0, k1)];
          }
        }
      }
    }
  }
}

} // namespace serial

// The parallel versions are written in gather form (one writer per output
// element) so no reductions or atomics are needed and results are
// independent of the thread count.
namespace omp {

int max_threads() { return omp_get_max_threads(); }

void annihilate(std::span<const cplx> x, int q_count, const Geometry &g,
                std::span<const cplx> taps, std::span<cplx> out) {
  check_sizes(x.size(), g.plane() * q_count, "input");
  check_sizes(taps.size(), g.taps() * q_count, "taps");
  check_sizes(out.size(), g.valid(), "output");
  const int v0 = g.valid0(), v1 = g.valid1();
  const int L0 = g.win.L[0], P0 = g.win.P[0], L1 = g.win.L[1], P1 = g.win.P[1];
  const int span1 = g.win.span(1);
  const std::size_t plane = g.plane(), ntaps = g.taps();
  const int s1 = g.s1;
#pragma omp parallel for schedule(static)
  for (int i0 = 0; i0 < v0; ++i0) {
    for (int i1 = 0; i1 < v1; ++i1) {
      cplx acc{};
      for (int q = 0; q < q_count; ++q) {
        const cplx *xq = x.data() + q * plane;
        const cplx *hq = taps.data() + q * ntaps;
        for (int k0 = -L0; k0 <= P0; ++k0) {
          const cplx *xrow = xq + static_cast<std::size_t>(i0 + P0 - k0) * s1 +
                             (i1 + P1);
          const cplx *hrow = hq + static_cast<std::size_t>(k0 + L0) * span1 + L1;
          for (int k1 = -L1; k1 <= P1; ++k1) {
            acc += hrow[k1] * xrow[-k1];
          }
        }
      }
      out[static_cast<std::size_t>(i0) * v1 + i1] = acc;
    }
  }
}

void annihilate_adjoint(std::span<const cplx> y, int q_count,
                        const Geometry &g, std::span<const cplx> taps,
                        std::span<cplx> x_accum) {
  check_sizes(y.size(), g.valid(), "input");
  check_sizes(taps.size(), g.taps() * q_count, "taps");
  check_sizes(x_accum.size(), g.plane() * q_count, "output");
  const int v0 = g.valid0(), v1 = g.valid1();
  const auto w = g.win;
  const std::size_t plane = g.plane(), ntaps = g.taps();
  const int s0 = g.s0, s1 = g.s1;
  // x_q[m] += sum_k conj(h_q[k]) y[i], with i = m - P + k.
#pragma omp parallel for schedule(static)
  for (int m0 = 0; m0 < s0; ++m0) {
    for (int q = 0; q < q_count; ++q) {
      const cplx *hq = taps.data() + q * ntaps;
      cplx *xq = x_accum.data() + q * plane;
      for (int m1 = 0; m1 < s1; ++m1) {
        cplx acc{};
        for (int k0 = -w.L[0]; k0 <= w.P[0]; ++k0) {
          const int i0 = m0 - w.P[0] + k0;
          if (i0 < 0 || i0 >= v0) {
            continue;
          }
          for (int k1 = -w.L[1]; k1 <= w.P[1]; ++k1) {
            const int i1 = m1 - w.P[1] + k1;
            if (i1 < 0 || i1 >= v1) {
              continue;
            }
            acc += std::conj(hq[w.tap_index(k0, k1)]) *
                   y[static_cast<std::size_t>(i0) * v1 + i1];
          }
        }
        xq[static_cast<std::size_t>(m0) * s1 + m1] += acc;
      }
    }
  }
}

void lift(std::span<const cplx> x, int q_count, const Geometry &g,
          std::span<cplx> mat) {
  check_sizes(x.size(), g.plane() * q_count, "input");
  const auto cols = g.taps() * q_count;
  check_sizes(mat.size(), g.valid() * cols, "matrix");
  const int v0 = g.valid0(), v1 = g.valid1();
  const auto w = g.win;
  const std::size_t plane = g.plane(), ntaps = g.taps();
  const int s1 = g.s1;
#pragma omp parallel for schedule(static)
  for (int i0 = 0; i0 < v0; ++i0) {
    for (int i1 = 0; i1 < v1; ++i1) {
      cplx *row = mat.data() + (static_cast<std::size_t>(i0) * v1 + i1) * cols;
      for (int q = 0; q < q_count; ++q) {
        const cplx *xq = x.data() + q * plane;
        cplx *rq = row + q * ntaps;
        for (int k0 = -w.L[0]; k0 <= w.P[0]; ++k0) {
          const cplx *src = xq + static_cast<std::size_t>(i0 + w.P[0] - k0) * s1 +
                            (i1 + w.P[1]);
          cplx *dst = rq + static_cast<std::size_t>(k0 + w.L[0]) * w.span(1) +
                      w.L[1];
          for (int k1 = -w.L[1]; k1 <= w.P[1]; ++k1) {
            dst[k1] = src[-k1];
          }
        }
      }
    }
  }
}

void unlift_accumulate(std::span<const cplx> mat, int q_count,
                       const Geometry &g, std::span<cplx> x_accum) {
  const auto cols = g.taps() * q_count;
  check_sizes(mat.size(), g.valid() * cols, "matrix");
  check_sizes(x_accum.size(), g.plane() * q_count, "output");
  const int v0 = g.valid0(), v1 = g.valid1();
  const auto w = g.win;
  const std::size_t plane = g.plane(), ntaps = g.taps();
  const int s0 = g.s0, s1 = g.s1;
#pragma omp parallel for schedule(static)
  for (int m0 = 0; m0 < s0; ++m0) {
    for (int q = 0; q < q_count; ++q) {
      cplx *xq = x_accum.data() + q * plane;
      for (int m1 = 0; m1 < s1; ++m1) {
        cplx acc{};
        for (int k0 = -w.L[0]; k0 <= w.P[0]; ++k0) {
          const int i0 = m0 - w.P[0] + k0;
          if (i0 < 0 || i0 >= v0) {
            continue;
          }
          for (int k1 = -w.L[1]; k1 <= w.P[1]; ++k1) {
            const int i1 = m1 - w.P[1] + k1;
            if (i1 < 0 || i1 >= v1) {
              continue;
            }
            acc += mat[(static_cast<std::size_t>(i0) * v1 + i1) * cols +
                       q * ntaps + w.tap_index(k0, k1)];
          }
        }
        xq[static_cast<std::size_t>(m0) * s1 + m1] += acc;
      }
    }
  }
}

} // namespace omp

} // namespace linpred::kernels
