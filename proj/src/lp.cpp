#include "linpred/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "linpred/error.hpp"
#include "linpred/kernels.hpp"
#include "linpred/linalg.hpp"

namespace linpred::lp {

namespace {

constexpr double kPi = std::numbers::pi;

// Channel-major copy of the data restricted to `box`.
std::vector<cplx> crop_stack(const MultiKSignal &data, const IndexBox &box) {
  std::vector<cplx> out;
  out.reserve(box.size() * data.q_count());
  for (const auto &ch : data.channels()) {
    for (int n0 = box.lo[0]; n0 <= box.hi[0]; ++n0) {
      for (int n1 = box.lo[1]; n1 <= box.hi[1]; ++n1) {
        out.push_back(ch.at(n0, n1));
      }
    }
  }
  return out;
}

MultiFilter bank_filter(const Window &w, int q_count, const Eigen::VectorXcd &v) {
  std::vector<cplx> flat(v.data(), v.data() + v.size());
  return MultiFilter::unflatten(w, q_count, flat);
}

} // namespace

CalibMatrix build_calib_matrix(const MultiKSignal &data, const IndexBox &calib,
                               const Window &window) {
  const auto &grid = data.grid();
  require(grid.box().contains(calib), "calibration region lies outside the grid");
  for (int a = 0; a < 2; ++a) {
    if (a >= grid.dims() && window.span(a) == 1) {
      continue;
    }
    const int need = window.L[a] + window.P[a] + 2;
    require(calib.extent(a) >= need,
            "calibration region too small: axis " + std::to_string(a) +
                " has " + std::to_string(calib.extent(a)) +
                " samples, need at least " + std::to_string(need));
  }
  const auto sub = KGrid::subrange(grid, calib);
  const auto g = kernels::Geometry::of(sub, window);
  CalibMatrix cm;
  cm.window = window;
  cm.q_count = data.q_count();
  cm.rows_box = valid_box(sub, window);
  RowMatrix m(static_cast<Eigen::Index>(g.valid()),
              static_cast<Eigen::Index>(g.taps() * data.q_count()));
  const auto stack = crop_stack(data, calib);
  kernels::omp::lift(stack, data.q_count(), g,
                     std::span<cplx>(m.data(), static_cast<std::size_t>(m.size())));
  cm.m = m;
  return cm;
}

FitResult fit_prediction_filter(const CalibMatrix &calib, int target,
                                const std::vector<TapRef> &zeroed,
                                std::optional<double> ridge) {
  require(target >= 0 && target < calib.q_count, "target channel out of range");
  const auto tcol = calib.column(target, 0, 0);
  std::set<Eigen::Index> drop{tcol};
  for (const auto &z : zeroed) {
    require(z.q >= 0 && z.q < calib.q_count, "zeroed tap channel out of range");
    require(z.k0 >= -calib.window.L[0] && z.k0 <= calib.window.P[0] &&
                z.k1 >= -calib.window.L[1] && z.k1 <= calib.window.P[1],
            "zeroed tap outside the window");
    drop.insert(calib.column(z.q, z.k0, z.k1));
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index c = 0; c < calib.m.cols(); ++c) {
    if (!drop.count(c)) {
      free.push_back(c);
    }
  }
  require(!free.empty(), "no free taps left to fit");
  const Matrix a = calib.m(Eigen::all, free);
  const Matrix b = calib.m.col(tcol);
  const Matrix x = ridge_solve(a, b, ridge);

  Eigen::VectorXcd flat = Eigen::VectorXcd::Zero(calib.m.cols());
  flat(tcol) = -1.0;
  for (std::size_t i = 0; i < free.size(); ++i) {
    flat(free[i]) = x(static_cast<Eigen::Index>(i), 0);
  }
  FitResult r{bank_filter(calib.window, calib.q_count, flat), 0.0,
              a.rows() < a.cols()};
  const auto rows = std::max<Eigen::Index>(1, a.rows());
  r.residual = (a * x - b).norm() / std::sqrt(static_cast<double>(rows));
  // Rebuild with the anchor recorded.
  r.filter = MultiFilter::unflatten(
      calib.window, calib.q_count,
      std::span<const cplx>(flat.data(), static_cast<std::size_t>(flat.size())),
      target);
  return r;
}

FilterBank nullspace_bank(const CalibMatrix &calib, double tau) {
  require(tau > 0.0 && tau <= 1.0, "nullspace threshold must lie in (0, 1]");
  const auto sv = right_singular(calib.m);
  FilterBank bank;
  const double smax = sv.sigma.empty() ? 0.0 : sv.sigma.front();
  const double rows = static_cast<double>(std::max<Eigen::Index>(1, calib.m.rows()));
  for (Eigen::Index j = sv.v.cols() - 1; j >= 0; --j) {
    const double s = sv.sigma[static_cast<std::size_t>(j)];
    if (s > tau * smax) {
      break;
    }
    Eigen::VectorXcd v = sv.v.col(j);
    normalize_phase(v);
    bank.filters.push_back(bank_filter(calib.window, calib.q_count, v));
    bank.residuals.push_back(s / std::sqrt(rows));
  }
  return bank;
}

FilterBank prediction_bank(const CalibMatrix &calib, std::optional<double> ridge) {
  std::vector<std::pair<double, MultiFilter>> fits;
  for (int q = 0; q < calib.q_count; ++q) {
    auto f = fit_prediction_filter(calib, q, {}, ridge);
    fits.emplace_back(f.residual, std::move(f.filter));
  }
  std::stable_sort(fits.begin(), fits.end(),
                   [](const auto &a, const auto &b) { return a.first < b.first; });
  FilterBank bank;
  for (auto &[r, f] : fits) {
    bank.residuals.push_back(r);
    bank.filters.push_back(std::move(f));
  }
  return bank;
}

std::vector<cplx> extrapolate(std::span<const cplx> seed, const Filter &filter,
                              int steps, Direction dir) {
  const auto &w = filter.window();
  require(w.dims == 1 && w.L[0] == 0, "extrapolation needs a causal 1D filter (L = 0)");
  require(steps >= 0, "step count must be nonnegative");
  const int P = w.P[0];
  require(static_cast<int>(seed.size()) >= P,
          "seed has " + std::to_string(seed.size()) + " samples, filter needs " +
              std::to_string(P));
  const auto h = filter.taps();
  std::vector<cplx> buf(seed.begin(), seed.end());
  std::vector<cplx> out;
  out.reserve(static_cast<std::size_t>(steps));
  if (dir == Direction::Forward) {
    require(h[0] != cplx{}, "forward extrapolation needs h[0] != 0");
    for (int s = 0; s < steps; ++s) {
      cplx acc{};
      const auto n = buf.size();
      for (int k = 1; k <= P; ++k) {
        acc += h[k] * buf[n - k];
      }
      const cplx next = -acc / h[0];
      buf.push_back(next);
      out.push_back(next);
    }
  } else {
    require(h[P] != cplx{}, "backward extrapolation needs h[P] != 0");
    // Keep the newest sample at the back: buf is the sequence reversed.
    std::reverse(buf.begin(), buf.end());
    for (int s = 0; s < steps; ++s) {
      // x[m] with m = start - 1 satisfies sum_k h[k] x[m + P - k] = 0.
      cplx acc{};
      const auto n = buf.size();
      for (int k = 0; k < P; ++k) {
        acc += h[k] * buf[n - (P - k)];
      }
      const cplx next = -acc / h[P];
      buf.push_back(next);
      out.push_back(next);
    }
  }
  return out;
}

std::string local_signature(const SamplingMask &mask, const Window &w, int n0,
                            int n1) {
  std::string sig(w.size(), '0');
  const auto &g = mask.grid();
  for (std::size_t t = 0; t < w.size(); ++t) {
    const auto k = w.tap_coords(t);
    const int m0 = n0 - k[0], m1 = n1 - k[1];
    if (g.contains(m0, m1) && mask.is_acquired(m0, m1)) {
      sig[t] = '1';
    }
  }
  return sig;
}

GrappaKernels fit_grappa(const MultiKSignal &calib_data, const IndexBox &calib,
                         const SamplingMask &mask, const Window &w,
                         std::optional<double> ridge) {
  if (!(calib_data.grid() == mask.grid())) {
    fail(ErrorCode::GridMismatch, "calibration data and mask grids differ");
  }
  const auto cm = build_calib_matrix(calib_data, calib, w);
  const int Q = cm.q_count;
  std::set<std::string> sigs;
  const auto &g = mask.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask.acquired()[i]) {
      const auto c = g.coords(i);
      sigs.insert(local_signature(mask, w, c[0], c[1]));
    }
  }
  const std::vector<std::string> list(sigs.begin(), sigs.end());
  std::vector<std::vector<MultiFilter>> fitted(list.size());

  std::vector<Eigen::Index> targets;
  for (int q = 0; q < Q; ++q) {
    targets.push_back(cm.column(q, 0, 0));
  }
  const Matrix rhs = cm.m(Eigen::all, targets);
  const auto count = static_cast<std::ptrdiff_t>(list.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    const auto &sig = list[static_cast<std::size_t>(s)];
    std::vector<Eigen::Index> free;
    for (int q = 0; q < Q; ++q) {
      for (std::size_t t = 0; t < w.size(); ++t) {
        if (sig[t] == '1') {
          free.push_back(static_cast<Eigen::Index>(q * w.size() + t));
        }
      }
    }
    if (free.empty()) {
      continue;
    }
    const Matrix a = cm.m(Eigen::all, free);
    const Matrix x = ridge_solve(a, rhs, ridge);
    for (int q = 0; q < Q; ++q) {
      Eigen::VectorXcd flat = Eigen::VectorXcd::Zero(cm.m.cols());
      flat(targets[q]) = -1.0;
      for (std::size_t i = 0; i < free.size(); ++i) {
        flat(free[i]) = x(static_cast<Eigen::Index>(i), q);
      }
      fitted[static_cast<std::size_t>(s)].push_back(MultiFilter::unflatten(
          w, Q,
          std::span<const cplx>(flat.data(), static_cast<std::size_t>(flat.size())),
          q));
    }
  }
  GrappaKernels out{w, Q, {}};
  for (std::size_t s = 0; s < list.size(); ++s) {
    for (int q = 0; q < static_cast<int>(fitted[s].size()); ++q) {
      out.kernels.emplace(std::make_pair(list[s], q), std::move(fitted[s][q]));
    }
  }
  return out;
}

PartialInterpolation interpolate_available(const MultiKSignal &data,
                                           const SamplingMask &mask,
                                           const GrappaKernels &kernels) {
  if (!(data.grid() == mask.grid())) {
    fail(ErrorCode::GridMismatch, "data and mask grids differ");
  }
  require(data.q_count() == kernels.q_count, "kernel and data channel counts differ");
  const auto &g = data.grid();
  const auto &w = kernels.window;
  const int Q = data.q_count();
  std::vector<std::vector<cplx>> out;
  for (const auto &ch : data.channels()) {
    out.push_back(ch.vec());
  }
  std::vector<std::uint8_t> filled(mask.acquired().begin(), mask.acquired().end());
  PartialInterpolation res;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask.acquired()[i]) {
      continue;
    }
    const auto c = g.coords(i);
    const auto sig = local_signature(mask, w, c[0], c[1]);
    bool ok = true;
    for (int q = 0; q < Q && ok; ++q) {
      ok = kernels.kernels.count({sig, q}) != 0;
    }
    if (!ok) {
      res.patterns.insert(sig);
      ++res.uncovered;
      for (int q = 0; q < Q; ++q) {
        out[q][i] = 0.0;
      }
      continue;
    }
    for (int q = 0; q < Q; ++q) {
      const auto &f = kernels.kernels.at({sig, q});
      cplx acc{};
      for (int p = 0; p < Q; ++p) {
        for (std::size_t t = 0; t < w.size(); ++t) {
          if (sig[t] != '1') {
            continue;
          }
          const auto k = w.tap_coords(t);
          acc += f.channel(p)[t] * data.channel(p).at(c[0] - k[0], c[1] - k[1]);
        }
      }
      out[q][i] = acc;
    }
    filled[i] = 1;
  }
  res.data = MultiKSignal(g, std::move(out));
  res.filled = SamplingMask(g, std::move(filled), mask.calib());
  return res;
}

MultiKSignal interpolate_missing(const MultiKSignal &data,
                                 const SamplingMask &mask,
                                 const GrappaKernels &kernels) {
  auto res = interpolate_available(data, mask, kernels);
  if (res.uncovered > 0) {
    std::string msg = "no interpolation kernel for " +
                      std::to_string(res.patterns.size()) + " local pattern(s):";
    int shown = 0;
    for (const auto &s : res.patterns) {
      if (shown++ == 8) {
        msg += " ...";
        break;
      }
      msg += " " + s;
    }
    fail(ErrorCode::UncoveredSignature, msg);
  }
  return std::move(res.data);
}

namespace {

cplx weight_factor(const KGrid &g, int axis, int n) {
  return cplx(0.0, 2.0 * kPi * n / g.axis(axis).fov);
}

} // namespace

KSignal highpass_weight(const KSignal &data, int axis) {
  const auto &g = data.grid();
  require(axis >= 0 && axis < g.dims(), "weighting axis out of range");
  std::vector<cplx> v(data.vec());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] *= weight_factor(g, axis, g.coords(i)[axis]);
  }
  return KSignal(g, std::move(v));
}

std::vector<cplx> dc_line(const KSignal &data, int axis) {
  const auto &g = data.grid();
  require(axis >= 0 && axis < g.dims(), "weighting axis out of range");
  std::vector<cplx> dc;
  if (!g.axis(axis).contains(0)) {
    return dc;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.coords(i)[axis] == 0) {
      dc.push_back(data.vec()[i]);
    }
  }
  return dc;
}

KSignal highpass_unweight(const KSignal &weighted, std::span<const cplx> dc,
                          int axis) {
  const auto &g = weighted.grid();
  require(axis >= 0 && axis < g.dims(), "weighting axis out of range");
  const bool has_zero = g.axis(axis).contains(0);
  const std::size_t line = g.size() / static_cast<std::size_t>(g.axis(axis).size());
  if (has_zero) {
    require(!dc.empty(), "unweighting needs the stored n = 0 samples");
    require(dc.size() == line, "stored n = 0 line has the wrong length");
  }
  std::vector<cplx> v(weighted.vec());
  std::size_t j = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int n = g.coords(i)[axis];
    if (n == 0) {
      v[i] = dc[j++];
    } else {
      v[i] /= weight_factor(g, axis, n);
    }
  }
  return KSignal(g, std::move(v));
}

namespace {

void require_boxcars_1d(const Phantom &p, const char *what) {
  require(p.dims() == 1, std::string(what) + " needs a 1D phantom");
  for (const auto &prim : p.primitives()) {
    require(prim.kind != PrimitiveKind::Point,
            std::string(what) + " rejects point primitives (|delta|^2 is not integrable)");
    require(prim.kind == PrimitiveKind::Boxcar,
            std::string(what) + " supports boxcar primitives only");
  }
}

} // namespace

cplx gram_sequence(const Phantom &phantom, int n) {
  require_boxcars_1d(phantom, "Gram operator");
  const double B = phantom.fov();
  const auto e = phantom.edges();
  cplx acc{};
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    const double a = e[i], b = e[i + 1];
    const double v = std::norm(phantom.value(0.5 * (a + b)));
    if (v == 0.0) {
      continue;
    }
    if (n == 0) {
      acc += v * (b - a);
    } else {
      const double w = 2.0 * kPi * n / B;
      acc += v * (std::polar(1.0, w * b) - std::polar(1.0, w * a)) / cplx(0.0, w);
    }
  }
  return acc / (B * B);
}

GramMatrix gram_operator(const Phantom &phantom, int L, int P) {
  require(L >= 0 && P >= 0, "L and P must be nonnegative");
  require_boxcars_1d(phantom, "Gram operator");
  const int W = L + P + 1;
  std::vector<cplx> seq(2 * W - 1);
  for (int d = -(W - 1); d <= W - 1; ++d) {
    seq[d + W - 1] = gram_sequence(phantom, d);
  }
  GramMatrix gm{Window::line(L, P), Matrix(W, W)};
  for (int r = 0; r < W; ++r) {
    for (int c = 0; c < W; ++c) {
      gm.g(r, c) = seq[c - r + W - 1];
    }
  }
  return gm;
}

FilterBank smallest_eigensequences(const GramMatrix &gram, int count) {
  const auto W = static_cast<int>(gram.g.rows());
  require(count >= 1 && count <= W,
          "requested " + std::to_string(count) + " eigensequences of a " +
              std::to_string(W) + "-dimensional operator");
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram.g);
  if (es.info() != Eigen::Success) {
    fail(ErrorCode::NotConverged, "Gram eigensolver failed");
  }
  FilterBank bank;
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXcd v = es.eigenvectors().col(j);
    normalize_phase(v);
    bank.filters.push_back(bank_filter(gram.window, 1, v));
    bank.residuals.push_back(std::max(0.0, es.eigenvalues()(j)));
  }
  return bank;
}

bool IdentityCheck::agrees(double rel_tol) const {
  return gap() <= std::max(rel_tol * std::abs(rhs), tail_bound) + 1e-300;
}

namespace {

// Sum of |amplitude| over bounded primitives; every sample obeys
// |rho[n]| <= A * B / (pi |n|).
double decay_of(const Phantom &p) {
  require(p.bounded(), "identity checks reject point primitives");
  return p.decay_constant();
}

} // namespace

IdentityCheck verify_taps(const std::vector<ChannelSource> &channels,
                          const Window &w,
                          const std::vector<std::vector<cplx>> &taps,
                          const KGrid &grid, int quadrature_points,
                          std::optional<double> tolerance) {
  require(!channels.empty(), "no channels to check");
  require(grid.dims() == 1, "identity checks are one-dimensional");
  require(taps.size() == channels.size(), "filter and channel counts differ");
  for (const auto &t : taps) {
    require(t.size() == w.size(), "channel tap count mismatch");
  }
  require(w.dims == 1, "identity checks need a 1D filter");
  require(quadrature_points >= 16, "need at least 16 quadrature points");
  const double B = grid.fov();
  const int Q = static_cast<int>(channels.size());
  for (const auto &c : channels) {
    require(c.phantom != nullptr, "channel without a phantom");
    require(c.phantom->dims() == 1, "identity checks are one-dimensional");
    decay_of(*c.phantom);
    if (std::abs(c.phantom->fov() - B) > 1e-12 * B) {
      fail(ErrorCode::GridMismatch, "phantom and grid fields of view differ");
    }
    if (c.modulator) {
      require(c.modulator->dims() == 1, "identity checks are one-dimensional");
    }
  }
  const int L = w.L[0], P = w.P[0];
  const int lo = grid.axis(0).n_min + P, hi = grid.axis(0).n_max - L;
  require(lo <= hi, "filter support is longer than the grid");

  // ---- streamed truncated sum ----
  constexpr int chunk = 8192;
  const long long total = static_cast<long long>(hi) - lo + 1;
  const auto nchunks = static_cast<std::ptrdiff_t>((total + chunk - 1) / chunk);
  std::vector<double> partial(static_cast<std::size_t>(nchunks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
    const int a = lo + static_cast<int>(c) * chunk;
    const int b = std::min(hi, a + chunk - 1);
    // Channel samples on [a - P, b + L].
    const int s_lo = a - P, s_hi = b + L;
    std::vector<std::vector<cplx>> samp(Q);
    for (int q = 0; q < Q; ++q) {
      const auto &src = channels[q];
      auto &v = samp[q];
      v.assign(static_cast<std::size_t>(s_hi - s_lo + 1), cplx{});
      if (!src.modulator) {
        for (int m = s_lo; m <= s_hi; ++m) {
          v[m - s_lo] = src.phantom->sample(m);
        }
        continue;
      }
      const auto &sup = src.modulator->support();
      const int j_lo = sup.lo[0], j_hi = sup.hi[0];
      std::vector<cplx> base(static_cast<std::size_t>(s_hi - s_lo + 1 + j_hi - j_lo));
      for (int m = s_lo - j_hi; m <= s_hi - j_lo; ++m) {
        base[m - (s_lo - j_hi)] = src.phantom->sample(m);
      }
      for (int m = s_lo; m <= s_hi; ++m) {
        cplx acc{};
        for (int j = j_lo; j <= j_hi; ++j) {
          acc += src.modulator->coeff(j) * base[m - j - (s_lo - j_hi)];
        }
        v[m - s_lo] = acc / B;
      }
    }
    double sum = 0.0;
    for (int n = a; n <= b; ++n) {
      cplx acc{};
      for (int q = 0; q < Q; ++q) {
        const auto &h = taps[q];
        for (int k = -L; k <= P; ++k) {
          acc += h[k + L] * samp[q][n - k - s_lo];
        }
      }
      sum += std::norm(acc);
    }
    partial[static_cast<std::size_t>(c)] = sum;
  }
  IdentityCheck out;
  for (double p : partial) {
    out.lhs += p;
  }

  // ---- quadrature of B int |sum_q c_q rho_q H_q|^2 over edge-aligned pieces ----
  std::vector<double> edges;
  for (const auto &c : channels) {
    const auto e = c.phantom->edges();
    edges.insert(edges.end(), e.begin(), e.end());
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-15; }),
              edges.end());
  auto integrand = [&](double x, const std::vector<cplx> &rho) {
    cplx acc{};
    for (int q = 0; q < Q; ++q) {
      if (rho[q] == cplx{}) {
        continue;
      }
      cplx hx{};
      const auto &h = taps[q];
      for (int k = -L; k <= P; ++k) {
        if (h[k + L] != cplx{}) {
          hx += h[k + L] * std::polar(1.0, 2.0 * kPi * k * x / B);
        }
      }
      const cplx cx = channels[q].modulator
                          ? channels[q].modulator->value({B, 1.0}, x)
                          : cplx(1.0);
      acc += cx * rho[q] * hx;
    }
    return std::norm(acc);
  };
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    const double mid = 0.5 * (a + b);
    std::vector<cplx> rho(Q);
    bool any = false;
    for (int q = 0; q < Q; ++q) {
      rho[q] = channels[q].phantom->value(mid);
      any = any || rho[q] != cplx{};
    }
    if (!any) {
      continue;
    }
    int m = static_cast<int>(std::ceil(quadrature_points * (b - a) / B));
    m = std::max(2, m + (m % 2));
    const double step = (b - a) / m;
    double s = integrand(a, rho) + integrand(b, rho);
    for (int j = 1; j < m; ++j) {
      s += (j % 2 ? 4.0 : 2.0) * integrand(a + j * step, rho);
    }
    integral += s * step / 3.0;
  }
  out.rhs = B * integral;

  // ---- tail bound: |conv[n]| <= C / (|n| - D) ----
  double C = 0.0;
  int D = std::max(L, P);
  int J = 0;
  for (int q = 0; q < Q; ++q) {
    double hs = 0.0;
    for (const auto &t : taps[q]) {
      hs += std::abs(t);
    }
    double ms = 1.0;
    if (channels[q].modulator) {
      ms = channels[q].modulator->sup_bound({B, 1.0});
      const auto &sup = channels[q].modulator->support();
      J = std::max({J, std::abs(sup.lo[0]), std::abs(sup.hi[0])});
    }
    C += hs * ms * decay_of(*channels[q].phantom) * B / kPi;
  }
  D += J;
  auto side = [&](long long first_missing_abs) {
    const double denom = static_cast<double>(first_missing_abs - 1 - D);
    return denom >= 1.0 ? C * C / denom : std::numeric_limits<double>::infinity();
  };
  out.tail_bound = side(static_cast<long long>(hi) + 1) + side(1LL - lo);
  if (tolerance && out.tail_bound > *tolerance * out.rhs) {
    fail(ErrorCode::InvalidArgument,
         "grid too small: truncation tail bound " + std::to_string(out.tail_bound) +
             " exceeds tolerance " + std::to_string(*tolerance * out.rhs));
  }
  return out;
}

IdentityCheck verify_channels(const std::vector<ChannelSource> &channels,
                              const MultiFilter &filter, const KGrid &grid,
                              int quadrature_points,
                              std::optional<double> tolerance) {
  std::vector<std::vector<cplx>> taps;
  for (int q = 0; q < filter.q_count(); ++q) {
    taps.emplace_back(filter.channel(q).begin(), filter.channel(q).end());
  }
  return verify_taps(channels, filter.window(), taps, grid, quadrature_points,
                     tolerance);
}

IdentityCheck verify_theorem1(const Phantom &phantom, const Filter &filter,
                              const KGrid &grid, int quadrature_points,
                              std::optional<double> tolerance) {
  return verify_channels({ChannelSource{&phantom, nullptr}}, MultiFilter::from(filter),
                         grid, quadrature_points, tolerance);
}

} // namespace linpred::lp
