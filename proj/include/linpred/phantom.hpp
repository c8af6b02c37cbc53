#pragma once

// Analytic phantoms with closed-form Fourier samples
//
//   rho[n] = int_{-B/2}^{B/2} rho(x) exp(-i 2 pi n x / B) dx
//
// and smooth modulation functions c(x) = (1/B) sum_n c[n] exp(i 2 pi n x / B)
// used as coil sensitivities, contrast changes or phase maps. In 2D the
// normalisation is 1 / (B0 B1) and the exponent sums over both axes.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "linpred/grid.hpp"

namespace linpred {

enum class PrimitiveKind { Boxcar, Ellipse, Point };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Boxcar;
  std::array<double, 2> center{0.0, 0.0};
  // Half-widths (boxcar) or semi-axes (ellipse); zero for points.
  std::array<double, 2> extent{0.0, 0.0};
  cplx amplitude{1.0, 0.0};

  static Primitive boxcar(double center, double half_width, cplx amp = 1.0) {
    return {PrimitiveKind::Boxcar, {center, 0.0}, {half_width, 0.0}, amp};
  }
  static Primitive point(double center, cplx amp = 1.0) {
    return {PrimitiveKind::Point, {center, 0.0}, {0.0, 0.0}, amp};
  }
};

class Phantom {
public:
  Phantom() = default;
  Phantom(int dims, std::array<double, 2> fov, std::vector<Primitive> prims);
  static Phantom line(double fov, std::vector<Primitive> prims) {
    return Phantom(1, {fov, 1.0}, std::move(prims));
  }

  int dims() const { return dims_; }
  double fov(int a = 0) const { return fov_[a]; }
  const std::array<double, 2> &fovs() const { return fov_; }
  const std::vector<Primitive> &primitives() const { return prims_; }
  bool bounded() const;

  // Closed-form sample at one index; defined for every integer index.
  cplx sample(int n0, int n1 = 0) const;
  // Spatial value; on a boxcar edge the primitive counts as present.
  cplx value(double x0, double x1 = 0.0) const;
  // Sorted breakpoints of the piecewise-constant 1D image, including the
  // FOV ends. Only meaningful for 1D bounded phantoms.
  std::vector<double> edges() const;
  // Upper bound A with |rho[n]| <= A * B / (pi |n|) for n != 0 (1D bounded).
  double decay_constant() const;

private:
  int dims_ = 1;
  std::array<double, 2> fov_{1.0, 1.0};
  std::vector<Primitive> prims_;
};

class Modulator {
public:
  Modulator() = default;
  // Coefficients over `support`, row-major like KGrid data.
  Modulator(int dims, IndexBox support, std::vector<cplx> coeffs);
  static Modulator constant(int dims, std::array<double, 2> fov, cplx value);
  static Modulator line(int lo, std::vector<cplx> coeffs) {
    const int hi = lo + static_cast<int>(coeffs.size()) - 1;
    return Modulator(1, IndexBox::line(lo, hi), std::move(coeffs));
  }

  int dims() const { return dims_; }
  const IndexBox &support() const { return support_; }
  const std::vector<cplx> &coeffs() const { return coeffs_; }
  cplx coeff(int m0, int m1 = 0) const;

  cplx value(const std::array<double, 2> &fov, double x0, double x1 = 0.0) const;
  // sum |c[m]| / (B0 B1): bound on sup |c(x)|.
  double sup_bound(const std::array<double, 2> &fov) const;
  // Conjugate-reversed coefficients, i.e. the series of conj(c(x)).
  Modulator conjugate() const;

private:
  int dims_ = 1;
  IndexBox support_;
  std::vector<cplx> coeffs_;
};

KSignal fourier_samples(const Phantom &phantom, const KGrid &grid);

// rho_q[n] = (1 / (B0 B1)) sum_m c[m] rho[n - m], evaluated exactly.
KSignal modulated_samples(const Phantom &phantom, const Modulator &mod,
                          const KGrid &grid);
// Same for several modulators, sharing one evaluation of the base samples.
std::vector<KSignal> modulated_samples(const Phantom &phantom,
                                       const std::vector<Modulator> &mods,
                                       const KGrid &grid);

// Deterministic smooth sensitivities with coefficients on [-bw, bw]^dims;
// redrawn until min_x sum_q |c_q(x)|^2 >= 0.1 max_x sum_q |c_q(x)|^2.
std::vector<Modulator> make_sensitivities(int q_count, int bandwidth,
                                          std::uint64_t seed, int dims = 1,
                                          std::array<double, 2> fov = {1.0,
                                                                       1.0});

struct PhaseModulators {
  Modulator c1; // Fourier series of exp(i phi(x))
  Modulator c2; // series of exp(-i phi(x)) = conj(c1(x))
  int expansion = 0;
};

// phi(x) is a real series on [-bw, bw] with seeded coefficients scaled by
// `scale`; exp(i phi) is truncated to |n| <= K with K doubled (at most 8
// times) until |c1(x)| is within 1e-3 of 1 on the check grid.
PhaseModulators make_phase_modulator(int bandwidth, std::uint64_t seed,
                                     double scale = 1.0, double fov = 1.0);

// Points used to check modulator properties: 512 in 1D, 64 x 64 in 2D.
std::vector<std::array<double, 2>> check_points(int dims,
                                                std::array<double, 2> fov);

} // namespace linpred
