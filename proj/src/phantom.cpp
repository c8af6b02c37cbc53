#include "linpred/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "linpred/error.hpp"

namespace linpred {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double t) {
  if (t == 0.0) {
    return 1.0;
  }
  const double pt = kPi * t;
  return std::sin(pt) / pt;
}

cplx phase_ramp(double n, double c, double fov) {
  const double a = -2.0 * kPi * n * c / fov;
  return {std::cos(a), std::sin(a)};
}

// FT of the unit-semi-axes ellipse scaled to (a, b): a b J1(2 pi r) / r.
double ellipse_ft(double a, double b, double u, double v) {
  const double r = std::hypot(a * u, b * v);
  if (r < 1e-12) {
    return kPi * a * b;
  }
  return a * b * std::cyl_bessel_j(1.0, 2.0 * kPi * r) / r;
}

std::size_t box_offset(const IndexBox &b, int m0, int m1) {
  return static_cast<std::size_t>(m0 - b.lo[0]) * b.extent(1) +
         static_cast<std::size_t>(m1 - b.lo[1]);
}

} // namespace

Phantom::Phantom(int dims, std::array<double, 2> fov,
                 std::vector<Primitive> prims)
    : dims_(dims), fov_(fov), prims_(std::move(prims)) {
  require(dims_ == 1 || dims_ == 2, "phantom dims must be 1 or 2");
  require(!prims_.empty(), "phantom needs at least one primitive");
  for (int a = 0; a < dims_; ++a) {
    require(fov_[a] > 0.0, "phantom fov must be positive");
  }
  if (dims_ == 1) {
    fov_[1] = 1.0;
  }
  constexpr double slack = 1e-12;
  for (const auto &p : prims_) {
    require(std::isfinite(p.amplitude.real()) && std::isfinite(p.amplitude.imag()),
            "primitive amplitude must be finite");
    if (p.kind == PrimitiveKind::Ellipse) {
      require(dims_ == 2, "ellipse primitives need a 2D phantom");
    }
    for (int a = 0; a < dims_; ++a) {
      if (p.kind == PrimitiveKind::Point) {
        require(p.extent[a] == 0.0, "point primitives have zero extent");
      } else {
        require(p.extent[a] > 0.0, "boxcar/ellipse extent must be positive");
      }
      require(std::abs(p.center[a]) + p.extent[a] <= fov_[a] / 2 * (1 + slack),
              "primitive support leaves the field of view");
    }
  }
}

bool Phantom::bounded() const {
  return std::none_of(prims_.begin(), prims_.end(), [](const Primitive &p) {
    return p.kind == PrimitiveKind::Point;
  });
}

cplx Phantom::sample(int n0, int n1) const {
  cplx acc{};
  for (const auto &p : prims_) {
    cplx ramp = phase_ramp(n0, p.center[0], fov_[0]);
    if (dims_ == 2) {
      ramp *= phase_ramp(n1, p.center[1], fov_[1]);
    }
    double mag = 1.0;
    switch (p.kind) {
    case PrimitiveKind::Point:
      break;
    case PrimitiveKind::Boxcar:
      mag = 2.0 * p.extent[0] * sinc(2.0 * p.extent[0] * n0 / fov_[0]);
      if (dims_ == 2) {
        mag *= 2.0 * p.extent[1] * sinc(2.0 * p.extent[1] * n1 / fov_[1]);
      }
      break;
    case PrimitiveKind::Ellipse:
      mag = ellipse_ft(p.extent[0], p.extent[1], n0 / fov_[0], n1 / fov_[1]);
      break;
    }
    acc += p.amplitude * ramp * mag;
  }
  return acc;
}

cplx Phantom::value(double x0, double x1) const {
  cplx acc{};
  for (const auto &p : prims_) {
    const double d0 = x0 - p.center[0];
    const double d1 = dims_ == 2 ? x1 - p.center[1] : 0.0;
    switch (p.kind) {
    case PrimitiveKind::Point:
      break;
    case PrimitiveKind::Boxcar:
      if (std::abs(d0) <= p.extent[0] &&
          (dims_ == 1 || std::abs(d1) <= p.extent[1])) {
        acc += p.amplitude;
      }
      break;
    case PrimitiveKind::Ellipse: {
      const double r = d0 * d0 / (p.extent[0] * p.extent[0]) +
                       d1 * d1 / (p.extent[1] * p.extent[1]);
      if (r <= 1.0) {
        acc += p.amplitude;
      }
      break;
    }
    }
  }
  return acc;
}

std::vector<double> Phantom::edges() const {
  std::vector<double> e{-fov_[0] / 2, fov_[0] / 2};
  for (const auto &p : prims_) {
    if (p.kind != PrimitiveKind::Point) {
      e.push_back(p.center[0] - p.extent[0]);
      e.push_back(p.center[0] + p.extent[0]);
    }
  }
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end(),
                      [](double a, double b) { return std::abs(a - b) < 1e-15; }),
          e.end());
  return e;
}

double Phantom::decay_constant() const {
  // 2w sinc(2wn/B) = B sin(2 pi w n / B) / (pi n), so |.| <= B / (pi |n|).
  double a = 0.0;
  for (const auto &p : prims_) {
    a += std::abs(p.amplitude);
  }
  return a;
}

Modulator::Modulator(int dims, IndexBox support, std::vector<cplx> coeffs)
    : dims_(dims), support_(support), coeffs_(std::move(coeffs)) {
  require(dims_ == 1 || dims_ == 2, "modulator dims must be 1 or 2");
  require(!support_.empty(), "modulator coefficient list must be nonempty");
  require(dims_ == 2 || (support_.lo[1] == 0 && support_.hi[1] == 0),
          "1D modulator cannot have a second-axis range");
  require(coeffs_.size() == support_.size(),
          "modulator coefficient count does not match its support");
  for (const auto &c : coeffs_) {
    require(std::isfinite(c.real()) && std::isfinite(c.imag()),
            "modulator coefficients must be finite");
  }
}

Modulator Modulator::constant(int dims, std::array<double, 2> fov, cplx value) {
  const double scale = dims == 2 ? fov[0] * fov[1] : fov[0];
  return Modulator(dims, IndexBox{}, {value * scale});
}

cplx Modulator::coeff(int m0, int m1) const {
  if (!support_.contains(m0, m1)) {
    return {};
  }
  return coeffs_[box_offset(support_, m0, m1)];
}

cplx Modulator::value(const std::array<double, 2> &fov, double x0,
                      double x1) const {
  cplx acc{};
  for (int m0 = support_.lo[0]; m0 <= support_.hi[0]; ++m0) {
    for (int m1 = support_.lo[1]; m1 <= support_.hi[1]; ++m1) {
      double arg = 2.0 * kPi * m0 * x0 / fov[0];
      if (dims_ == 2) {
        arg += 2.0 * kPi * m1 * x1 / fov[1];
      }
      acc += coeffs_[box_offset(support_, m0, m1)] *
             cplx(std::cos(arg), std::sin(arg));
    }
  }
  return acc / (dims_ == 2 ? fov[0] * fov[1] : fov[0]);
}

double Modulator::sup_bound(const std::array<double, 2> &fov) const {
  double s = 0.0;
  for (const auto &c : coeffs_) {
    s += std::abs(c);
  }
  return s / (dims_ == 2 ? fov[0] * fov[1] : fov[0]);
}

Modulator Modulator::conjugate() const {
  IndexBox b{{-support_.hi[0], -support_.hi[1]}, {-support_.lo[0], -support_.lo[1]}};
  std::vector<cplx> c(coeffs_.size());
  for (int m0 = b.lo[0]; m0 <= b.hi[0]; ++m0) {
    for (int m1 = b.lo[1]; m1 <= b.hi[1]; ++m1) {
      c[box_offset(b, m0, m1)] = std::conj(coeff(-m0, -m1));
    }
  }
  return Modulator(dims_, b, std::move(c));
}

namespace {

void check_fov(const Phantom &phantom, const KGrid &grid) {
  require(phantom.dims() == grid.dims(), "phantom and grid dimensionality differ");
  for (int a = 0; a < grid.dims(); ++a) {
    if (std::abs(phantom.fov(a) - grid.axis(a).fov) > 1e-12 * phantom.fov(a)) {
      fail(ErrorCode::GridMismatch, "phantom and grid fields of view differ");
    }
  }
}

} // namespace

KSignal fourier_samples(const Phantom &phantom, const KGrid &grid) {
  check_fov(phantom, grid);
  std::vector<cplx> v(grid.size());
  const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto c = grid.coords(static_cast<std::size_t>(i));
    v[i] = phantom.sample(c[0], c[1]);
  }
  return KSignal(grid, std::move(v));
}

std::vector<KSignal> modulated_samples(const Phantom &phantom,
                                       const std::vector<Modulator> &mods,
                                       const KGrid &grid) {
  check_fov(phantom, grid);
  if (mods.empty()) {
    return {};
  }
  // One pass of closed-form samples over the grid widened by the union of
  // the modulator supports, then a short discrete convolution per channel.
  IndexBox u = mods.front().support();
  for (const auto &m : mods) {
    require(m.dims() == phantom.dims(), "modulator and phantom dims differ");
    for (int a = 0; a < 2; ++a) {
      u.lo[a] = std::min(u.lo[a], m.support().lo[a]);
      u.hi[a] = std::max(u.hi[a], m.support().hi[a]);
    }
  }
  const auto gb = grid.box();
  const IndexBox wide{{gb.lo[0] - u.hi[0], gb.lo[1] - u.hi[1]},
                      {gb.hi[0] - u.lo[0], gb.hi[1] - u.lo[1]}};
  std::vector<cplx> base(wide.size());
  const auto nb = static_cast<std::ptrdiff_t>(base.size());
  const auto w1 = static_cast<std::size_t>(wide.extent(1));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < nb; ++i) {
    const int n0 = wide.lo[0] + static_cast<int>(static_cast<std::size_t>(i) / w1);
    const int n1 = wide.lo[1] + static_cast<int>(static_cast<std::size_t>(i) % w1);
    base[i] = phantom.sample(n0, n1);
  }
  const double scale =
      phantom.dims() == 2 ? phantom.fov(0) * phantom.fov(1) : phantom.fov(0);
  std::vector<KSignal> out;
  for (const auto &mod : mods) {
    const auto &sup = mod.support();
    std::vector<cplx> v(grid.size());
    const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto c = grid.coords(static_cast<std::size_t>(i));
      cplx acc{};
      for (int m0 = sup.lo[0]; m0 <= sup.hi[0]; ++m0) {
        for (int m1 = sup.lo[1]; m1 <= sup.hi[1]; ++m1) {
          const cplx cm = mod.coeff(m0, m1);
          if (cm != cplx{}) {
            acc += cm * base[box_offset(wide, c[0] - m0, c[1] - m1)];
          }
        }
      }
      v[i] = acc / scale;
    }
    out.emplace_back(grid, std::move(v));
  }
  return out;
}

KSignal modulated_samples(const Phantom &phantom, const Modulator &mod,
                          const KGrid &grid) {
  return std::move(modulated_samples(phantom, std::vector<Modulator>{mod}, grid).front());
}

std::vector<std::array<double, 2>> check_points(int dims,
                                                std::array<double, 2> fov) {
  std::vector<std::array<double, 2>> pts;
  if (dims == 1) {
    constexpr int m = 512;
    for (int j = 0; j < m; ++j) {
      pts.push_back({-fov[0] / 2 + fov[0] * (j + 0.5) / m, 0.0});
    }
  } else {
    constexpr int m = 64;
    for (int j0 = 0; j0 < m; ++j0) {
      for (int j1 = 0; j1 < m; ++j1) {
        pts.push_back({-fov[0] / 2 + fov[0] * (j0 + 0.5) / m,
                       -fov[1] / 2 + fov[1] * (j1 + 0.5) / m});
      }
    }
  }
  return pts;
}

std::vector<Modulator> make_sensitivities(int q_count, int bandwidth,
                                          std::uint64_t seed, int dims,
                                          std::array<double, 2> fov) {
  require(q_count >= 1, "q_count must be at least 1");
  require(bandwidth >= 0, "bandwidth must be nonnegative");
  require(dims == 1 || dims == 2, "dims must be 1 or 2");
  if (dims == 1) {
    fov[1] = 1.0;
  }
  const double scale = dims == 2 ? fov[0] * fov[1] : fov[0];
  const int bw1 = dims == 2 ? bandwidth : 0;
  const IndexBox support{{-bandwidth, -bw1}, {bandwidth, bw1}};
  const auto pts = check_points(dims, fov);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr int max_attempts = 200;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Modulator> mods;
    for (int q = 0; q < q_count; ++q) {
      std::vector<cplx> c;
      for (int m0 = support.lo[0]; m0 <= support.hi[0]; ++m0) {
        for (int m1 = support.lo[1]; m1 <= support.hi[1]; ++m1) {
          const double decay = 1.0 / (1.0 + std::hypot(m0, m1));
          cplx z(gauss(rng), gauss(rng));
          z *= 0.5 * decay;
          if (m0 == 0 && m1 == 0) {
            z += 1.0;
          }
          c.push_back(z * scale);
        }
      }
      mods.emplace_back(dims, support, std::move(c));
    }
    double lo = INFINITY, hi = 0.0;
    for (const auto &x : pts) {
      double s = 0.0;
      for (const auto &m : mods) {
        s += std::norm(m.value(fov, x[0], x[1]));
      }
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    if (lo >= 0.1 * hi && hi > 0.0) {
      return mods;
    }
  }
  fail(ErrorCode::NotConverged, "could not draw well-conditioned sensitivities");
}

PhaseModulators make_phase_modulator(int bandwidth, std::uint64_t seed,
                                     double scale, double fov) {
  require(bandwidth >= 0, "bandwidth must be nonnegative");
  require(fov > 0.0, "fov must be positive");
  // Real phase series: phi[-m] = conj(phi[m]).
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<cplx> phi(bandwidth + 1);
  phi[0] = scale * gauss(rng);
  for (int m = 1; m <= bandwidth; ++m) {
    phi[m] = scale * cplx(gauss(rng), gauss(rng)) / (1.0 + m);
  }
  auto phase_at = [&](double x) {
    double p = phi[0].real();
    for (int m = 1; m <= bandwidth; ++m) {
      const double a = 2.0 * kPi * m * x / fov;
      p += 2.0 * (phi[m] * cplx(std::cos(a), std::sin(a))).real();
    }
    return p;
  };

  // Coefficients of exp(i phi) by the periodic trapezoid rule, which is
  // spectrally accurate for a smooth periodic integrand.
  constexpr int quad = 2048;
  std::vector<cplx> e(quad);
  std::vector<double> xs(quad);
  for (int j = 0; j < quad; ++j) {
    xs[j] = -fov / 2 + fov * j / quad;
    const double p = phase_at(xs[j]);
    e[j] = {std::cos(p), std::sin(p)};
  }
  auto coefficient = [&](int n) {
    cplx acc{};
    for (int j = 0; j < quad; ++j) {
      const double a = -2.0 * kPi * n * xs[j] / fov;
      acc += e[j] * cplx(std::cos(a), std::sin(a));
    }
    return acc * (fov / quad);
  };

  const auto pts = check_points(1, {fov, 1.0});
  int K = std::max(1, bandwidth);
  for (int doubling = 0; doubling <= 8; ++doubling, K *= 2) {
    std::vector<cplx> c;
    for (int n = -K; n <= K; ++n) {
      c.push_back(coefficient(n));
    }
    Modulator c1 = Modulator::line(-K, std::move(c));
    double worst = 0.0;
    for (const auto &x : pts) {
      worst = std::max(worst, std::abs(std::abs(c1.value({fov, 1.0}, x[0])) - 1.0));
    }
    if (worst <= 1e-3) {
      Modulator c2 = c1.conjugate();
      return {std::move(c1), std::move(c2), K};
    }
  }
  fail(ErrorCode::NotConverged,
       "phase expansion did not reach unit magnitude within 8 doublings");
}

} // namespace linpred
