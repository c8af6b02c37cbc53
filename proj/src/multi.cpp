#include "linpred/multi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "linpred/error.hpp"
#include "linpred/kernels.hpp"
#include "linpred/linalg.hpp"

namespace linpred::multi {

namespace {

constexpr double kPi = std::numbers::pi;

bool same_fov(const Phantom &a, const Phantom &b) {
  return a.dims() == b.dims() && std::abs(a.fov(0) - b.fov(0)) <= 1e-12 * a.fov(0) &&
         std::abs(a.fov(1) - b.fov(1)) <= 1e-12 * a.fov(1);
}

// Channels [first, first + count) of a multichannel signal.
MultiKSignal channel_range(const MultiKSignal &x, int first, int count) {
  std::vector<KSignal> ch;
  for (int q = first; q < first + count; ++q) {
    ch.push_back(x.channel(q));
  }
  return MultiKSignal(std::move(ch));
}

std::vector<cplx> flatten(const Separator &s) {
  std::vector<cplx> out;
  for (const auto &t : s.taps) {
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

} // namespace

const char *to_string(Scenario s) {
  switch (s) {
  case Scenario::Parallel: return "parallel";
  case Scenario::Multicontrast: return "multicontrast";
  case Scenario::VirtualConjugate: return "virtual-conjugate";
  }
  return "parallel";
}

Scenario parse_scenario(const std::string &s) {
  if (s == "parallel") {
    return Scenario::Parallel;
  }
  if (s == "multicontrast") {
    return Scenario::Multicontrast;
  }
  if (s == "virtual-conjugate") {
    return Scenario::VirtualConjugate;
  }
  fail(ErrorCode::InvalidArgument, "unknown scenario '" + s + "'");
}

void MultiScene::validate() const {
  require(!modulators.empty(), "scene needs at least one modulator");
  for (const auto &m : modulators) {
    require(m.dims() == base.dims(), "modulator and phantom dims differ");
  }
  if (scenario == Scenario::VirtualConjugate) {
    require(modulators.size() == 2, "virtual-conjugate scene has exactly two channels");
    const auto c = modulators[0].conjugate();
    bool ok = c.support() == modulators[1].support();
    for (std::size_t i = 0; ok && i < c.coeffs().size(); ++i) {
      ok = std::abs(c.coeffs()[i] - modulators[1].coeffs()[i]) <=
           1e-14 * (1.0 + std::abs(c.coeffs()[i]));
    }
    require(ok, "virtual-conjugate scene needs c_2 = conj(c_1)");
  }
}

MultiScene virtual_conjugate_scene(const Phantom &base, const Modulator &c) {
  MultiScene s{base, {c, c.conjugate()}, Scenario::VirtualConjugate};
  s.validate();
  return s;
}

MultiKSignal scene_samples(const MultiScene &scene, const KGrid &grid) {
  scene.validate();
  return MultiKSignal(modulated_samples(scene.base, scene.modulators, grid));
}

lp::IdentityCheck verify_theorem2(const MultiScene &scene, const MultiFilter &mf,
                                  const KGrid &grid, int quadrature_points,
                                  std::optional<double> tolerance) {
  scene.validate();
  std::vector<lp::ChannelSource> ch;
  for (const auto &m : scene.modulators) {
    ch.push_back({&scene.base, &m});
  }
  return lp::verify_channels(ch, mf, grid, quadrature_points, tolerance);
}

SmashResult smash_fit(const std::vector<Modulator> &modulators, int target, int L,
                      int P, double fov, int points) {
  require(!modulators.empty(), "no modulators to fit");
  require(target >= 0 && target < static_cast<int>(modulators.size()),
          "target channel out of range");
  require(L >= 0 && P >= 0, "L and P must be nonnegative");
  require(fov > 0.0, "fov must be positive");
  const int W = L + P + 1;
  require(points >= 8 * W, "spatial grid needs at least 8 (P + L + 1) = " +
                               std::to_string(8 * W) + " points");
  for (const auto &m : modulators) {
    require(m.dims() == 1, "SMASH fitting takes 1D modulators");
  }
  const int Q = static_cast<int>(modulators.size());
  const Window w = Window::line(L, P);
  const std::array<double, 2> fovs{fov, 1.0};

  Eigen::MatrixXcd basis(points, Q * W);
  Eigen::VectorXcd rhs(points);
  for (int j = 0; j < points; ++j) {
    const double x = -fov / 2 + fov * (j + 0.5) / points;
    for (int q = 0; q < Q; ++q) {
      const cplx c = modulators[q].value(fovs, x);
      for (int k = -L; k <= P; ++k) {
        basis(j, q * W + k + L) = c * std::polar(1.0, 2.0 * kPi * k * x / fov);
      }
    }
    rhs(j) = modulators[target].value(fovs, x);
  }
  std::vector<Eigen::Index> free;
  const Eigen::Index tcol = target * W + L;
  for (Eigen::Index c = 0; c < Q * W; ++c) {
    if (c != tcol) {
      free.push_back(c);
    }
  }
  Eigen::VectorXcd flat = Eigen::VectorXcd::Zero(Q * W);
  flat(tcol) = -1.0;
  SmashResult res;
  if (!free.empty()) {
    const Eigen::MatrixXcd a = basis(Eigen::all, free);
    Eigen::MatrixXcd x;
    try {
      x = ridge_solve(a, rhs, 0.0);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::Singular) {
        throw;
      }
      res.ridge_fallback = true;
      res.warnings.push_back("degenerate normal equations; ridge regularisation used");
      x = ridge_solve(a, rhs);
    }
    for (std::size_t i = 0; i < free.size(); ++i) {
      flat(free[i]) = x(static_cast<Eigen::Index>(i), 0);
    }
  } else {
    res.warnings.push_back("no free taps: single channel with a one-tap window");
  }
  const Eigen::VectorXcd r = basis * flat;
  res.residual = r.norm() / std::sqrt(static_cast<double>(points));
  res.filter = MultiFilter::unflatten(
      w, Q, std::span<const cplx>(flat.data(), static_cast<std::size_t>(flat.size())),
      target);
  return res;
}

void SmsScene::validate() const {
  require(slices.size() >= 2, "SMS scene needs at least two slices");
  for (const auto &s : slices) {
    require(same_fov(s, slices.front()), "slices must share dims and fov");
  }
  if (!coils.empty()) {
    require(coils.size() == slices.size(), "need one coil set per slice");
    for (const auto &c : coils) {
      require(!c.empty() && c.size() == coils.front().size(),
              "every slice needs the same number of coils");
    }
  }
}

MultiKSignal sms_slices(const SmsScene &scene, const KGrid &grid) {
  scene.validate();
  std::vector<KSignal> ch;
  for (int r = 0; r < scene.slice_count(); ++r) {
    if (scene.coils.empty()) {
      ch.push_back(fourier_samples(scene.slices[r], grid));
    } else {
      auto c = modulated_samples(scene.slices[r], scene.coils[r], grid);
      for (auto &k : c) {
        ch.push_back(std::move(k));
      }
    }
  }
  return MultiKSignal(std::move(ch));
}

MultiKSignal superpose(const MultiKSignal &slices, int coils) {
  require(coils >= 1 && slices.q_count() % coils == 0,
          "channel count is not a multiple of the coil count");
  const int R = slices.q_count() / coils;
  const auto &g = slices.grid();
  std::vector<std::vector<cplx>> s(coils, std::vector<cplx>(g.size()));
  for (int r = 0; r < R; ++r) {
    for (int q = 0; q < coils; ++q) {
      const auto &v = slices.channel(r * coils + q).vec();
      for (std::size_t i = 0; i < v.size(); ++i) {
        s[q][i] += v[i];
      }
    }
  }
  return MultiKSignal(g, std::move(s));
}

MultiKSignal sms_superpose(const SmsScene &scene, const KGrid &grid) {
  return superpose(sms_slices(scene, grid), scene.coil_count());
}

Separator Separator::from(const MultiFilter &f) {
  Separator s{f.window(), {}};
  for (int q = 0; q < f.q_count(); ++q) {
    s.taps.emplace_back(f.channel(q).begin(), f.channel(q).end());
  }
  return s;
}

SeparatorFit sms_fit_separator(const MultiKSignal &slices, int coils,
                               const IndexBox &calib, int target, int coil,
                               const Window &w, double mu) {
  require(coils >= 1 && slices.q_count() % coils == 0,
          "channel count is not a multiple of the coil count");
  const int R = slices.q_count() / coils;
  require(target >= 0 && target < R, "target slice out of range");
  require(coil >= 0 && coil < coils, "target coil out of range");
  require(mu >= 0.0, "leakage weight must be nonnegative");
  const auto s = superpose(slices, coils);
  const auto cs = lp::build_calib_matrix(s, calib, w);
  const auto ct = lp::build_calib_matrix(channel_range(slices, target * coils, coils),
                                         calib, w);
  const Eigen::Index rows = cs.m.rows();
  const Eigen::Index cols = cs.m.cols();
  std::vector<Eigen::MatrixXcd> leak;
  for (int r = 0; r < R; ++r) {
    if (r != target) {
      leak.push_back(
          lp::build_calib_matrix(channel_range(slices, r * coils, coils), calib, w).m);
    }
  }
  const double sm = std::sqrt(mu);
  const auto blocks = static_cast<Eigen::Index>(mu > 0.0 ? leak.size() : 0);
  Eigen::MatrixXcd a(rows * (1 + blocks), cols);
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(rows * (1 + blocks));
  a.topRows(rows) = cs.m;
  b.head(rows) = ct.m.col(ct.column(coil, 0, 0));
  for (Eigen::Index j = 0; j < blocks; ++j) {
    a.middleRows(rows * (1 + j), rows) = sm * leak[static_cast<std::size_t>(j)];
  }
  SeparatorFit fit;
  Eigen::MatrixXcd x;
  try {
    x = ridge_solve(a, b, 0.0);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::Singular) {
      throw;
    }
    fit.ridge_fallback = true;
    x = ridge_solve(a, b);
  }
  fit.filter.window = w;
  for (int q = 0; q < coils; ++q) {
    fit.filter.taps.emplace_back(x.data() + q * w.size(), x.data() + (q + 1) * w.size());
  }
  const double nr = std::sqrt(static_cast<double>(rows));
  fit.residual = (cs.m * x - ct.m.col(ct.column(coil, 0, 0))).norm() / nr;
  double le = 0.0;
  for (const auto &l : leak) {
    le += (l * x).squaredNorm();
  }
  fit.leakage = std::sqrt(le) / nr;
  return fit;
}

std::vector<SeparatorFit> sms_fit_separators(const MultiKSignal &slices, int coils,
                                             const IndexBox &calib, const Window &w,
                                             double mu) {
  const int R = slices.q_count() / coils;
  std::vector<SeparatorFit> out;
  for (int r = 0; r < R; ++r) {
    for (int q = 0; q < coils; ++q) {
      out.push_back(sms_fit_separator(slices, coils, calib, r, q, w, mu));
    }
  }
  return out;
}

namespace {

KSignal apply_separator(const MultiKSignal &s, const Separator &sep) {
  require(sep.q_count() == s.q_count(), "separator and data channel counts differ");
  const auto &g = s.grid();
  const auto box = valid_box(g, sep.window);
  require(!box.empty(), "separator support is longer than the data");
  const auto geo = kernels::Geometry::of(g, sep.window);
  std::vector<cplx> out(geo.valid());
  kernels::omp::annihilate(s.stacked(), s.q_count(), geo, flatten(sep), out);
  return KSignal(KGrid::subrange(g, box), std::move(out));
}

Window enclosing(const Window &a, const Window &b) {
  require(a.dims == b.dims, "filters mix 1D and 2D windows");
  Window w = a;
  for (int i = 0; i < 2; ++i) {
    w.L[i] = std::max(a.L[i], b.L[i]);
    w.P[i] = std::max(a.P[i], b.P[i]);
  }
  return w;
}

std::vector<cplx> embed(const std::vector<cplx> &taps, const Window &from,
                        const Window &to) {
  std::vector<cplx> out(to.size());
  for (std::size_t t = 0; t < taps.size(); ++t) {
    const auto k = from.tap_coords(t);
    out[to.tap_index(k[0], k[1])] = taps[t];
  }
  return out;
}

} // namespace

MultiKSignal sms_separate(const MultiKSignal &superposed,
                          const std::vector<Separator> &separators) {
  require(!separators.empty(), "no separators given");
  std::vector<KSignal> out;
  for (const auto &sep : separators) {
    out.push_back(apply_separator(superposed, sep));
  }
  return MultiKSignal(std::move(out));
}

SmsSeparation sms_separate_undersampled(const MultiKSignal &superposed,
                                        const SamplingMask &mask,
                                        const std::vector<Separator> &separators,
                                        const SmsUndersampledParams &params) {
  const int Q = superposed.q_count();
  require(!separators.empty() && separators.size() % Q == 0,
          "need R * Q separators, slice-major");
  const int R = static_cast<int>(separators.size()) / Q;
  const auto &g = superposed.grid();
  Window w = separators.front().window;
  for (const auto &s : separators) {
    require(s.q_count() == Q, "separators must cover every superposed channel");
    w = enclosing(w, s.window);
  }
  for (const auto &f : params.intra.filters) {
    require(f.q_count() == Q, "intra-slice filters must cover every coil");
    w = enclosing(w, f.window());
  }
  require(!params.annihilation.virtual_channels,
          "virtual channels are not supported for SMS separation");
  const int qa = Q + R * Q;
  const auto W = w.size();
  const auto t0 = w.tap_index(0, 0);
  auto slice_ch = [&](int r, int q) { return Q + r * Q + q; };

  lp::FilterBank bank;
  auto add = [&](std::vector<std::vector<cplx>> taps) {
    bank.filters.emplace_back(w, std::move(taps));
    bank.residuals.push_back(0.0);
  };
  for (int r = 0; r < R; ++r) {
    for (int q = 0; q < Q; ++q) {
      const auto &sep = separators[r * Q + q];
      std::vector<std::vector<cplx>> taps(qa, std::vector<cplx>(W));
      for (int p = 0; p < Q; ++p) {
        taps[p] = embed(sep.taps[p], sep.window, w);
      }
      taps[slice_ch(r, q)][t0] = -1.0;
      add(std::move(taps));
    }
  }
  for (int q = 0; q < Q; ++q) {
    std::vector<std::vector<cplx>> taps(qa, std::vector<cplx>(W));
    taps[q][t0] = params.superposition_weight;
    for (int r = 0; r < R; ++r) {
      taps[slice_ch(r, q)][t0] = -params.superposition_weight;
    }
    add(std::move(taps));
  }
  for (const auto &f : params.intra.filters) {
    for (int r = 0; r < R; ++r) {
      std::vector<std::vector<cplx>> taps(qa, std::vector<cplx>(W));
      for (int q = 0; q < Q; ++q) {
        const auto c = f.channel(q);
        taps[slice_ch(r, q)] =
            embed(std::vector<cplx>(c.begin(), c.end()), f.window(), w);
      }
      add(std::move(taps));
    }
  }

  std::vector<KSignal> ch(superposed.channels());
  std::vector<SamplingMask> masks(Q, mask);
  const SamplingMask none(g, std::vector<std::uint8_t>(g.size(), 0));
  for (int i = 0; i < R * Q; ++i) {
    ch.push_back(KSignal::zeros(g));
    masks.push_back(none);
  }
  auto ap = params.annihilation;
  auto res = recon::annihilation_recon(MultiKSignal(std::move(ch)), masks, bank, ap);
  res.report.engine = "sms-annihilation";
  return {channel_range(res.data, Q, R * Q), channel_range(res.data, 0, Q), res.report};
}

std::vector<std::vector<double>> sms_leakage(const MultiKSignal &slices, int coils,
                                             const std::vector<Separator> &separators) {
  require(coils >= 1 && slices.q_count() % coils == 0,
          "channel count is not a multiple of the coil count");
  const int R = slices.q_count() / coils;
  require(static_cast<int>(separators.size()) == R * coils,
          "need one separator per slice and coil");
  const auto box = valid_box(slices.grid(), separators.front().window);
  std::vector<std::vector<double>> leak(R, std::vector<double>(R, 0.0));
  for (int r = 0; r < R; ++r) {
    double ref = 0.0;
    for (int q = 0; q < coils; ++q) {
      const auto &c = slices.channel(r * coils + q);
      for (int n0 = box.lo[0]; n0 <= box.hi[0]; ++n0) {
        for (int n1 = box.lo[1]; n1 <= box.hi[1]; ++n1) {
          ref += std::norm(c.at(n0, n1));
        }
      }
    }
    for (int p = 0; p < R; ++p) {
      const auto src = channel_range(slices, p * coils, coils);
      double e = 0.0;
      for (int q = 0; q < coils; ++q) {
        const auto est = apply_separator(src, separators[r * coils + q]);
        e += norm2(est.values()) * norm2(est.values());
      }
      leak[r][p] = ref > 0.0 ? std::sqrt(e / ref) : std::sqrt(e);
    }
  }
  return leak;
}

lp::IdentityCheck verify_theorem3(const SmsScene &scene, int m, const Filter &filter,
                                  const KGrid &grid, int quadrature_points,
                                  std::optional<double> tolerance) {
  scene.validate();
  require(m >= 0 && m < scene.slice_count(), "target slice out of range");
  std::vector<lp::ChannelSource> ch;
  std::vector<std::vector<cplx>> taps;
  const auto &w = filter.window();
  for (int r = 0; r < scene.slice_count(); ++r) {
    ch.push_back({&scene.slices[r], nullptr});
    taps.push_back(filter.vec());
    if (r == m) {
      taps.back()[w.tap_index(0, 0)] -= 1.0;
    }
  }
  return lp::verify_taps(ch, w, taps, grid, quadrature_points, tolerance);
}

} // namespace linpred::multi
