#include "linpred/recon.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "linpred/error.hpp"
#include "linpred/kernels.hpp"

namespace linpred::recon {

namespace {

using Vec = std::vector<cplx>;

double rdot(const Vec &a, const Vec &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  }
  return s;
}

double sqnorm(const Vec &a) { return rdot(a, a); }

// conj(x[-n]) for one plane; returns the count of unpaired indices.
std::size_t reverse_plane(const KGrid &g, const cplx *x, cplx *out) {
  std::size_t unpaired = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto c = g.coords(i);
    const int m0 = -c[0], m1 = g.dims() == 2 ? -c[1] : c[1];
    if (g.contains(m0, m1)) {
      out[i] = std::conj(x[g.index(m0, m1)]);
    } else {
      out[i] = 0.0;
      ++unpaired;
    }
  }
  return unpaired;
}

// [x, conj-reversed x] when `virt`, otherwise x itself.
Vec augment(const KGrid &g, const Vec &x, int q_count, bool virt) {
  if (!virt) {
    return x;
  }
  const auto plane = g.size();
  Vec out(2 * x.size());
  std::copy(x.begin(), x.end(), out.begin());
  for (int q = 0; q < q_count; ++q) {
    reverse_plane(g, x.data() + q * plane, out.data() + (q_count + q) * plane);
  }
  return out;
}

// Real adjoint of augment: fold the virtual planes back.
Vec fold(const KGrid &g, const Vec &acc, int q_count, bool virt) {
  if (!virt) {
    return acc;
  }
  const auto plane = g.size();
  Vec out(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(q_count * plane));
  Vec tmp(plane);
  for (int q = 0; q < q_count; ++q) {
    reverse_plane(g, acc.data() + (q_count + q) * plane, tmp.data());
    for (std::size_t i = 0; i < plane; ++i) {
      out[q * plane + i] += tmp[i];
    }
  }
  return out;
}

MultiKSignal from_stack(const KGrid &g, const Vec &x, int q_count) {
  std::vector<std::vector<cplx>> ch(q_count);
  const auto plane = g.size();
  for (int q = 0; q < q_count; ++q) {
    ch[q].assign(x.begin() + static_cast<std::ptrdiff_t>(q * plane),
                 x.begin() + static_cast<std::ptrdiff_t>((q + 1) * plane));
  }
  return MultiKSignal(g, std::move(ch));
}

} // namespace

const char *to_string(Variant v) { return v == Variant::C ? "C" : "S"; }

Variant parse_variant(const std::string &s) {
  if (s == "C" || s == "c") {
    return Variant::C;
  }
  if (s == "S" || s == "s") {
    return Variant::S;
  }
  fail(ErrorCode::InvalidArgument, "unknown structured-matrix variant '" + s + "'");
}

KSignal conjugate_reverse(const KSignal &x, std::size_t *unpaired) {
  Vec out(x.size());
  const auto u = reverse_plane(x.grid(), x.vec().data(), out.data());
  if (unpaired) {
    *unpaired = u;
  }
  return KSignal(x.grid(), std::move(out));
}

VirtualResult virtual_conjugate(const MultiKSignal &data) {
  std::vector<KSignal> ch(data.channels());
  VirtualResult r;
  for (const auto &c : data.channels()) {
    ch.push_back(conjugate_reverse(c, &r.unpaired));
  }
  r.data = MultiKSignal(std::move(ch));
  return r;
}

StructuredMatrix lift(const MultiKSignal &data, const Window &w, Variant v) {
  const auto &g = data.grid();
  const auto geo = kernels::Geometry::of(g, w);
  require(geo.valid() > 0, "window larger than the grid");
  const int qa = data.q_count() * (v == Variant::S ? 2 : 1);
  StructuredMatrix sm{v, w, g, data.q_count(), {}};
  sm.m.resize(static_cast<Eigen::Index>(geo.valid()),
              static_cast<Eigen::Index>(geo.taps() * qa));
  const auto x = augment(g, data.stacked(), data.q_count(), v == Variant::S);
  kernels::omp::lift(x, qa, geo,
                     std::span<cplx>(sm.m.data(), static_cast<std::size_t>(sm.m.size())));
  return sm;
}

namespace {

Vec adjoint_stack(const StructuredMatrix &m) {
  const auto geo = kernels::Geometry::of(m.grid, m.window);
  const bool virt = m.variant == Variant::S;
  const int qa = m.q_count * (virt ? 2 : 1);
  if (m.m.rows() != static_cast<Eigen::Index>(geo.valid()) ||
      m.m.cols() != static_cast<Eigen::Index>(geo.taps() * qa)) {
    fail(ErrorCode::InvalidArgument,
         "structured matrix is " + std::to_string(m.m.rows()) + "x" +
             std::to_string(m.m.cols()) + ", expected " +
             std::to_string(geo.valid()) + "x" + std::to_string(geo.taps() * qa));
  }
  Vec acc(geo.plane() * qa);
  kernels::omp::unlift_accumulate(
      std::span<const cplx>(m.m.data(), static_cast<std::size_t>(m.m.size())), qa,
      geo, acc);
  return fold(m.grid, acc, m.q_count, virt);
}

} // namespace

MultiKSignal lift_adjoint(const StructuredMatrix &m) {
  return from_stack(m.grid, adjoint_stack(m), m.q_count);
}

std::vector<double> window_counts(const KGrid &grid, const Window &w, Variant v,
                                  int q_count) {
  StructuredMatrix ones{v, w, grid, q_count, {}};
  const auto geo = kernels::Geometry::of(grid, w);
  const int qa = q_count * (v == Variant::S ? 2 : 1);
  ones.m = RowMatrix::Ones(static_cast<Eigen::Index>(geo.valid()),
                           static_cast<Eigen::Index>(geo.taps() * qa));
  const auto acc = adjoint_stack(ones);
  std::vector<double> c(grid.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = acc[i].real();
  }
  return c;
}

MultiKSignal unlift(const StructuredMatrix &m) {
  auto x = adjoint_stack(m);
  const auto counts = window_counts(m.grid, m.window, m.variant, m.q_count);
  const auto plane = m.grid.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = counts[i % plane];
    x[i] = c > 0.0 ? x[i] / c : cplx{};
  }
  return from_stack(m.grid, x, m.q_count);
}

namespace {

struct Truncation {
  std::vector<double> sigma; // descending
  Eigen::MatrixXcd v;        // right singular vectors, same order
};

// Right singular structure of M: direct SVD for small matrices, otherwise
// the eigendecomposition of M^H M (fast, and accurate enough for a
// projection onto the dominant subspace).
Truncation right_structure(const RowMatrix &m) {
  Truncation t;
  if (m.rows() * m.cols() <= 40000 || m.rows() < m.cols()) {
    const auto sv = right_singular(m);
    t.sigma = sv.sigma;
    t.v = sv.v;
    return t;
  }
  const Eigen::MatrixXcd gram = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
  const auto n = gram.cols();
  t.v.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    t.v.col(j) = es.eigenvectors().col(n - 1 - j);
    t.sigma.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(n - 1 - j))));
  }
  return t;
}

int auto_rank(const std::vector<double> &sigma, double tau) {
  int r = 0;
  for (double s : sigma) {
    if (s >= tau * sigma.front() && s > 0.0) {
      ++r;
    }
  }
  return std::max(1, r);
}

std::vector<double> head(const std::vector<double> &sigma, std::size_t n = 8) {
  std::vector<double> h;
  for (std::size_t i = 0; i < std::min(n, sigma.size()); ++i) {
    h.push_back(sigma.front() > 0.0 ? sigma[i] / sigma.front() : 0.0);
  }
  return h;
}

double data_residual(const Vec &x, const Vec &meas, const std::vector<uint8_t> &known) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (known[i]) {
      num += std::norm(x[i] - meas[i]);
      den += std::norm(meas[i]);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

} // namespace

ReconResult lowrank_complete(const MultiKSignal &measured, const SamplingMask &mask,
                             const LowrankParams &params) {
  const auto &g = measured.grid();
  if (!(g == mask.grid())) {
    fail(ErrorCode::GridMismatch, "data and mask grids differ");
  }
  require(params.max_iters >= 1, "max_iters must be at least 1");
  require(params.tol >= 0.0, "tol must be nonnegative");
  require(params.rank >= 0, "rank must be nonnegative (0 = automatic)");
  const int Q = measured.q_count();
  const auto geo = kernels::Geometry::of(g, params.window);
  require(geo.valid() > 0, "window larger than the grid");
  const auto rows = static_cast<int>(geo.valid());
  const auto cols = static_cast<int>(geo.taps()) * Q * (params.variant == Variant::S ? 2 : 1);
  const int min_dim = std::min(rows, cols);

  ReconReport rep;
  rep.engine = std::string("lowrank-") + to_string(params.variant);
  const auto plane = g.size();
  const auto meas = zero_fill(measured, mask).stacked();
  std::vector<uint8_t> known(meas.size());
  for (std::size_t i = 0; i < meas.size(); ++i) {
    known[i] = mask.acquired()[i % plane];
  }
  const auto counts = window_counts(g, params.window, params.variant, Q);
  for (std::size_t i = 0; i < plane; ++i) {
    if (counts[i] == 0.0 && !mask.acquired()[i]) {
      ++rep.uncovered;
    }
  }
  if (rep.uncovered) {
    rep.warnings.push_back(std::to_string(rep.uncovered) +
                           " missing samples are not covered by any window");
  }

  int r = params.rank;
  if (r > min_dim) {
    fail(ErrorCode::InvalidArgument,
         "rank " + std::to_string(r) + " exceeds the structured-matrix dimension " +
             std::to_string(min_dim));
  }
  if (r == 0) {
    // Automatic rank from the calibration block when one fits the window,
    // otherwise from the zero-filled data.
    MultiKSignal src = from_stack(g, meas, Q);
    if (mask.calib()) {
      const auto sub = KGrid::subrange(g, *mask.calib());
      if (kernels::Geometry::of(sub, params.window).valid() > 0) {
        std::vector<std::vector<cplx>> ch(Q);
        for (int q = 0; q < Q; ++q) {
          for (std::size_t i = 0; i < sub.size(); ++i) {
            const auto c = sub.coords(i);
            ch[q].push_back(measured.channel(q).at(c[0], c[1]));
          }
        }
        src = MultiKSignal(sub, std::move(ch));
      }
    }
    const auto t = right_structure(lift(src, params.window, params.variant).m);
    r = auto_rank(t.sigma, params.auto_tau);
  }
  rep.rank = r;

  Vec x = meas;
  if (params.initial) {
    if (!(params.initial->grid() == g) || params.initial->q_count() != Q) {
      fail(ErrorCode::GridMismatch, "initial estimate does not match the data");
    }
    const auto init = params.initial->stacked();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!known[i]) {
        x[i] = init[i];
      }
    }
  }
  std::vector<double> sigma;
  for (int it = 1; it <= params.max_iters; ++it) {
    auto sm = lift(from_stack(g, x, Q), params.window, params.variant);
    const auto t = right_structure(sm.m);
    sigma = t.sigma;
    if (r < min_dim) {
      const Eigen::MatrixXcd vr = t.v.leftCols(r);
      const Eigen::MatrixXcd mv = sm.m * vr;
      sm.m = mv * vr.adjoint();
    }
    auto xn = adjoint_stack(sm);
    for (std::size_t i = 0; i < xn.size(); ++i) {
      const double c = counts[i % plane];
      if (known[i]) {
        xn[i] = meas[i];
      } else if (c > 0.0) {
        xn[i] /= c;
      } else {
        xn[i] = x[i];
      }
    }
    double diff = 0.0, nrm = 0.0;
    for (std::size_t i = 0; i < xn.size(); ++i) {
      diff += std::norm(xn[i] - x[i]);
      nrm += std::norm(xn[i]);
    }
    x = std::move(xn);
    rep.iterations = it;
    rep.residual = nrm > 0.0 ? std::sqrt(diff / nrm) : std::sqrt(diff);
    if (rep.residual <= params.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.spectrum_head = head(sigma);
  rep.data_residual = data_residual(x, meas, known);
  return {from_stack(g, x, Q), rep};
}

namespace {

// Stacked annihilation operator for a bank on (possibly virtual) channels.
struct BankOperator {
  KGrid grid;
  int q_count;
  bool virt;
  kernels::Geometry geo;
  std::vector<std::vector<cplx>> taps;

  std::size_t rows() const { return geo.valid() * taps.size(); }

  Vec apply(const Vec &x) const {
    const auto xa = augment(grid, x, q_count, virt);
    const int qa = q_count * (virt ? 2 : 1);
    Vec y(rows());
    for (std::size_t j = 0; j < taps.size(); ++j) {
      kernels::omp::annihilate(
          xa, qa, geo, taps[j],
          std::span<cplx>(y.data() + j * geo.valid(), geo.valid()));
    }
    return y;
  }

  Vec adjoint(const Vec &y) const {
    const int qa = q_count * (virt ? 2 : 1);
    Vec acc(geo.plane() * qa);
    for (std::size_t j = 0; j < taps.size(); ++j) {
      kernels::omp::annihilate_adjoint(
          std::span<const cplx>(y.data() + j * geo.valid(), geo.valid()), qa, geo,
          taps[j], acc);
    }
    return fold(grid, acc, q_count, virt);
  }

  Vec normal(const Vec &x) const { return adjoint(apply(x)); }
};

// Largest / smallest Ritz value of the CG Lanczos tridiagonal.
double lanczos_condition(const std::vector<double> &alphas,
                         const std::vector<double> &betas) {
  const auto k = static_cast<Eigen::Index>(alphas.size());
  if (k == 0) {
    return 1.0;
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    t(j, j) = 1.0 / alphas[j] + (j > 0 ? betas[j - 1] / alphas[j - 1] : 0.0);
    if (j + 1 < k) {
      t(j, j + 1) = t(j + 1, j) = std::sqrt(betas[j]) / alphas[j];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(k - 1);
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

} // namespace

ReconResult annihilation_recon(const MultiKSignal &measured,
                               const std::vector<SamplingMask> &masks,
                               const lp::FilterBank &bank,
                               const AnnihilationParams &params) {
  const auto &g = measured.grid();
  const int Q = measured.q_count();
  require(!bank.empty(), "annihilation needs at least one filter");
  require(masks.size() == 1 || static_cast<int>(masks.size()) == Q,
          "need one mask or one per channel");
  require(params.max_iters >= 0, "max_iters must be nonnegative");
  if (params.mode == AnnihilationMode::Soft) {
    require(params.lambda > 0.0, "soft mode needs lambda > 0");
  }
  for (const auto &m : masks) {
    if (!(m.grid() == g)) {
      fail(ErrorCode::GridMismatch, "data and mask grids differ");
    }
  }
  const int qa = Q * (params.virtual_channels ? 2 : 1);
  const Window w = bank.filters.front().window();
  BankOperator op{g, Q, params.virtual_channels, kernels::Geometry::of(g, w), {}};
  require(op.geo.valid() > 0, "filter support is longer than the grid");
  for (const auto &f : bank.filters) {
    require(f.window() == w, "bank filters must share one window");
    require(f.q_count() == qa, "bank filter covers " + std::to_string(f.q_count()) +
                                   " channels, expected " + std::to_string(qa));
    op.taps.push_back(f.flatten());
  }

  const auto plane = g.size();
  Vec meas = measured.stacked();
  std::vector<uint8_t> known(meas.size());
  std::size_t missing = 0;
  for (std::size_t i = 0; i < meas.size(); ++i) {
    const auto &m = masks.size() == 1 ? masks[0] : masks[i / plane];
    known[i] = m.acquired()[i % plane];
    if (!known[i]) {
      meas[i] = 0.0;
      ++missing;
    }
  }

  ReconReport rep;
  rep.engine = params.mode == AnnihilationMode::Hard ? "annihilation-hard"
                                                     : "annihilation-soft";
  auto project_unknown = [&](Vec &v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (known[i]) {
        v[i] = 0.0;
      }
    }
  };

  Vec x = meas;
  if (params.mode == AnnihilationMode::Hard && missing == 0) {
    rep.converged = true;
    rep.objective.push_back(sqnorm(op.apply(x)));
    return {from_stack(g, x, Q), rep};
  }

  // CG on H u = b with H symmetric positive semidefinite (real inner product).
  std::function<Vec(const Vec &)> hop;
  Vec b;
  double c0 = 0.0;
  if (params.mode == AnnihilationMode::Hard) {
    hop = [&](const Vec &v) {
      auto r = op.normal(v);
      project_unknown(r);
      return r;
    };
    const auto am = op.apply(meas);
    c0 = sqnorm(am);
    b = op.adjoint(am);
    project_unknown(b);
    for (auto &z : b) {
      z = -z;
    }
  } else {
    hop = [&](const Vec &v) {
      auto r = op.normal(v);
      for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = params.lambda * r[i] + (known[i] ? v[i] : cplx{});
      }
      return r;
    };
    b = meas;
    c0 = sqnorm(meas);
  }

  Vec u(meas.size());
  Vec r = b;
  Vec p = r;
  const double bnorm = std::sqrt(sqnorm(b));
  double rr = sqnorm(r);
  std::vector<double> alphas, betas;
  // Objective of the quadratic c - 2 <u, b> + <u, H u> = c - <u, b + r>.
  auto objective = [&]() {
    Vec br(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
      br[i] = b[i] + r[i];
    }
    return c0 - rdot(u, br);
  };
  rep.objective.push_back(objective());
  if (bnorm == 0.0) {
    rep.converged = true;
  }
  for (int it = 0; it < params.max_iters && !rep.converged; ++it) {
    const auto hp = hop(p);
    const double php = rdot(p, hp);
    if (php <= 0.0) {
      rep.warnings.push_back("normal operator is singular along a search direction");
      break;
    }
    const double alpha = rr / php;
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] += alpha * p[i];
      r[i] -= alpha * hp[i];
    }
    const double rr_new = sqnorm(r);
    alphas.push_back(alpha);
    rep.iterations = it + 1;
    rep.objective.push_back(objective());
    rep.residual = std::sqrt(rr_new) / bnorm;
    if (rep.residual <= params.tol) {
      rep.converged = true;
      break;
    }
    const double beta = rr_new / rr;
    betas.push_back(beta);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = r[i] + beta * p[i];
    }
    rr = rr_new;
  }
  rep.condition_estimate = lanczos_condition(alphas, betas);
  if (params.mode == AnnihilationMode::Hard) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = known[i] ? meas[i] : u[i];
    }
  } else {
    x = u;
  }
  rep.data_residual = data_residual(x, meas, known);
  return {from_stack(g, x, Q), rep};
}

ReconResult annihilation_recon(const MultiKSignal &measured, const SamplingMask &mask,
                               const lp::FilterBank &bank,
                               const AnnihilationParams &params) {
  return annihilation_recon(measured, std::vector<SamplingMask>{mask}, bank, params);
}

ReconResult pf_recon(const MultiKSignal &measured, const SamplingMask &mask,
                     const PfParams &params) {
  if (params.method == PfMethod::LowrankS) {
    auto lp = params.lowrank;
    lp.variant = Variant::S;
    if (params.mirror_init && !lp.initial) {
      const auto z = zero_fill(measured, mask);
      const auto &g = z.grid();
      std::vector<KSignal> ch;
      for (int q = 0; q < z.q_count(); ++q) {
        const auto mirrored = conjugate_reverse(z.channel(q));
        std::vector<cplx> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const auto c = g.coords(i);
          const bool mirror_known = g.contains(-c[0], -c[1]) &&
                                    mask.is_acquired(-c[0], g.dims() > 1 ? -c[1] : 0);
          v[i] = mirror_known ? mirrored.vec()[i] : cplx{};
        }
        ch.emplace_back(g, std::move(v));
      }
      lp.initial = MultiKSignal(std::move(ch));
    }
    auto res = lowrank_complete(measured, mask, lp);
    res.report.engine = "pf-lowrank-S";
    return res;
  }
  if (!mask.calib()) {
    fail(ErrorCode::InvalidArgument,
         "filter fitting needs a calibration region, but the mask has none");
  }
  // Use the part of the calibration block whose mirror is also inside it,
  // so virtual channels are genuine there.
  auto cal = *mask.calib();
  for (int a = 0; a < measured.grid().dims(); ++a) {
    const int h = std::min(-cal.lo[a], cal.hi[a]);
    require(h >= 0, "calibration region must contain index 0");
    cal.lo[a] = -h;
    cal.hi[a] = h;
  }
  const auto vc = virtual_conjugate(zero_fill(measured, mask));
  const auto cm = lp::build_calib_matrix(vc.data, cal, params.lowrank.window);
  const auto bank = lp::nullspace_bank(cm, params.null_tau);
  if (bank.empty()) {
    fail(ErrorCode::Singular,
         "no calibration nullspace below the threshold; raise the threshold");
  }
  auto ap = params.annihilation;
  ap.virtual_channels = true;
  auto res = annihilation_recon(measured, mask, bank, ap);
  res.report.engine = "pf-annihilation-virtual";
  return res;
}

} // namespace linpred::recon
