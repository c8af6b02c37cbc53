#include <cmath>
#include <functional>

#include "doctest.h"

#include "linpred/error.hpp"
#include "linpred/phantom.hpp"
#include "oracles.hpp"

using namespace linpred;
using oracle::pi;

namespace {

const cplx I{0.0, 1.0};

// int c(x) rho(x) exp(-i 2 pi n x / B) over the FOV, one Simpson rule per
// constant piece of rho, taking its value from the piece midpoint.
cplx quadrature_sample(const Phantom &ph, const Modulator *mod, int n) {
  const double B = ph.fov();
  const auto e = ph.edges();
  cplx s = 0.0;
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    if (e[i + 1] <= e[i]) {
      continue;
    }
    const cplx r = ph.value(0.5 * (e[i] + e[i + 1]));
    std::function<cplx(double)> f = [&](double x) {
      const cplx c = mod ? mod->value(ph.fovs(), x) : cplx(1.0);
      return c * r * std::polar(1.0, -2.0 * pi * n * x / B);
    };
    s += oracle::simpson<cplx>(f, e[i], e[i + 1], 2048);
  }
  return s;
}

} // namespace

TEST_CASE("boxcar and point samples") {
  const auto box = Phantom::line(1.0, {Primitive::boxcar(0.0, 0.25)});
  CHECK(std::abs(box.sample(0) - 0.5) < 1e-15);
  CHECK(std::abs(box.sample(1) - 1.0 / pi) < 1e-15);
  CHECK(std::abs(box.sample(2)) < 1e-15);
  CHECK(std::abs(box.sample(3) + 1.0 / (3.0 * pi)) < 1e-15);

  const auto pt = Phantom::line(1.0, {Primitive::point(0.25)});
  const cplx expect[] = {1.0, -I, -1.0, I};
  for (int n = 0; n < 4; ++n) {
    CHECK(std::abs(pt.sample(n) - expect[n]) < 1e-15);
  }

  const auto two = Phantom::line(1.0, {Primitive::point(0.0), Primitive::point(0.5)});
  for (int n = -5; n <= 5; ++n) {
    CHECK(std::abs(two.sample(n) - (n % 2 == 0 ? 2.0 : 0.0)) < 1e-14);
  }
}

TEST_CASE("samples are additive over primitives") {
  const Primitive a = Primitive::boxcar(0.1, 0.2, {1.0, 0.5});
  const Primitive b = Primitive::boxcar(-0.3, 0.1, -0.7);
  const auto ab = Phantom::line(2.0, {a, b});
  const auto pa = Phantom::line(2.0, {a}), pb = Phantom::line(2.0, {b});
  for (int n = -20; n <= 20; ++n) {
    CHECK(std::abs(ab.sample(n) - pa.sample(n) - pb.sample(n)) < 1e-14);
  }
}

TEST_CASE("real symmetric boxcar has conjugate-symmetric samples") {
  const auto box = Phantom::line(1.0, {Primitive::boxcar(0.0, 0.3, 1.7)});
  for (int n = 1; n <= 50; ++n) {
    CHECK(std::abs(box.sample(-n) - std::conj(box.sample(n))) < 1e-14);
  }
}

TEST_CASE("phantom validation") {
  CHECK_THROWS_AS(Phantom::line(1.0, {Primitive::boxcar(0.4, 0.2)}), Error);
  CHECK_THROWS_AS(Phantom::line(1.0, {Primitive::boxcar(0.0, -0.1)}), Error);
  CHECK_THROWS_AS(Phantom::line(1.0, {{PrimitiveKind::Point, {0.0, 0.0}, {0.1, 0.0}, 1.0}}),
                  Error);
  CHECK_THROWS_AS(fourier_samples(Phantom::line(1.0, {Primitive::boxcar(0.0, 0.25, 0.0)}), KGrid::line(-2, 2, 2.0)), Error);
}

TEST_CASE("closed forms agree with quadrature") {
  const auto ph = Phantom::line(
      1.0, {Primitive::boxcar(0.05, 0.2, {1.0, -0.3}), Primitive::boxcar(-0.3, 0.12, 0.8)});
  for (int n = -12; n <= 12; ++n) {
    const cplx q = quadrature_sample(ph, nullptr, n);
    CHECK(std::abs(ph.sample(n) - q) <= 1e-9 * std::abs(ph.sample(0)));
  }
}

TEST_CASE("modulated samples") {
  const auto box = Phantom::line(1.0, {Primitive::boxcar(0.0, 0.25)});
  const auto g = KGrid::centered(16);
  const auto base = fourier_samples(box, g);

  SUBCASE("identity modulator") {
    const auto m = modulated_samples(box, Modulator::line(0, {1.0}), g);
    CHECK(m.vec() == base.vec());
  }
  SUBCASE("pure harmonic shifts the samples") {
    const auto m = modulated_samples(box, Modulator::line(1, {1.0}), g);
    for (int n = -8; n <= 7; ++n) {
      CHECK(std::abs(m.at(n) - box.sample(n - 1)) < 1e-15);
    }
  }
  SUBCASE("two-term modulator against quadrature") {
    const auto mod = Modulator::line(0, {1.0, 0.5});
    const auto m = modulated_samples(box, mod, g);
    CHECK(std::abs(m.at(0) - (0.5 + 0.5 / pi)) < 1e-15);
    for (int n = -8; n <= 7; ++n) {
      CHECK(std::abs(m.at(n) - quadrature_sample(box, &mod, n)) < 1e-9);
    }
  }
  SUBCASE("batched form matches the single form") {
    const auto mods = make_sensitivities(3, 2, 11);
    const auto all = modulated_samples(box, mods, g);
    for (std::size_t q = 0; q < mods.size(); ++q) {
      CHECK(all[q].vec() == modulated_samples(box, mods[q], g).vec());
    }
  }
}

TEST_CASE("modulation with a wider FOV") {
  const double B = 3.0;
  const auto ph = Phantom::line(B, {Primitive::boxcar(0.4, 0.7, 1.3)});
  const auto mod = Modulator::line(-1, {cplx(0.2, 1.0), cplx(2.0, 0.0), cplx(-0.4, 0.3)});
  const auto m = modulated_samples(ph, mod, KGrid::line(-6, 6, B));
  for (int n = -6; n <= 6; ++n) {
    CHECK(std::abs(m.at(n) - quadrature_sample(ph, &mod, n)) < 1e-9);
  }
}

TEST_CASE("2D ellipse against quadrature") {
  const Primitive e{PrimitiveKind::Ellipse, {0.6, -0.4}, {2.5, 1.5}, 1.0};
  const Phantom ph(2, {8.0, 6.0}, {e});
  for (auto [n0, n1] : {std::pair{0, 0}, {1, 0}, {0, 1}, {3, -2}, {-5, 4}, {7, 7}}) {
    const cplx ref = oracle::ellipse_sample(0.6, -0.4, 2.5, 1.5, n0, n1, 8.0, 6.0);
    CHECK(std::abs(ph.sample(n0, n1) - ref) < 1e-9);
  }
  CHECK(std::abs(ph.sample(0, 0) - pi * 2.5 * 1.5) < 1e-12);
}

TEST_CASE("2D boxcar is separable") {
  const Primitive b{PrimitiveKind::Boxcar, {0.1, -0.2}, {0.3, 0.15}, 2.0};
  const Phantom ph(2, {1.0, 1.0}, {b});
  const auto x = Phantom::line(1.0, {Primitive::boxcar(0.1, 0.3)});
  const auto y = Phantom::line(1.0, {Primitive::boxcar(-0.2, 0.15)});
  for (int n0 = -3; n0 <= 3; ++n0) {
    for (int n1 = -3; n1 <= 3; ++n1) {
      CHECK(std::abs(ph.sample(n0, n1) - 2.0 * x.sample(n0) * y.sample(n1)) < 1e-14);
    }
  }
}

TEST_CASE("sensitivities") {
  SUBCASE("degenerate band is a nonzero constant") {
    const auto s = make_sensitivities(1, 0, 3);
    REQUIRE(s.size() == 1);
    CHECK(s[0].coeffs().size() == 1);
    CHECK(std::abs(s[0].coeffs()[0]) > 0.0);
  }
  SUBCASE("deterministic") {
    const auto a = make_sensitivities(4, 2, 5), b = make_sensitivities(4, 2, 5);
    for (std::size_t q = 0; q < 4; ++q) {
      CHECK(a[q].coeffs() == b[q].coeffs());
    }
    CHECK(make_sensitivities(4, 2, 6)[0].coeffs() != a[0].coeffs());
  }
  SUBCASE("sum of squares is bounded away from zero") {
    const auto s = make_sensitivities(8, 2, 1);
    double lo = INFINITY, hi = 0.0;
    for (int i = 0; i < 512; ++i) {
      const double x = -0.5 + (i + 0.5) / 512.0;
      double ss = 0.0;
      for (const auto &c : s) {
        ss += std::norm(c.value({1.0, 1.0}, x));
      }
      lo = std::min(lo, ss);
      hi = std::max(hi, ss);
    }
    CHECK(lo >= 0.1 * hi);
  }
}

TEST_CASE("phase modulators") {
  SUBCASE("bandwidth 2, seed 7 has unit magnitude") {
    const auto p = make_phase_modulator(2, 7);
    for (int i = 0; i < 512; ++i) {
      const double x = -0.5 + (i + 0.5) / 512.0;
      const double mag = std::abs(p.c1.value({1.0, 1.0}, x));
      CHECK(mag >= 0.999);
      CHECK(mag <= 1.001);
      CHECK(std::abs(p.c2.value({1.0, 1.0}, x) - std::conj(p.c1.value({1.0, 1.0}, x))) < 1e-12);
    }
  }
  SUBCASE("bandwidth 0 is a global phase") {
    const auto p = make_phase_modulator(0, 3);
    CHECK(std::abs(std::abs(p.c1.value({1.0, 1.0}, 0.2)) - 1.0) < 1e-12);
    CHECK(std::abs(p.c1.value({1.0, 1.0}, 0.2) - p.c1.value({1.0, 1.0}, -0.4)) < 1e-12);
  }
  SUBCASE("zero phase gives ones") {
    const auto p = make_phase_modulator(2, 7, 0.0);
    CHECK(std::abs(p.c1.value({1.0, 1.0}, 0.1) - 1.0) < 1e-12);
    CHECK(std::abs(p.c2.value({1.0, 1.0}, -0.3) - 1.0) < 1e-12);
  }
  SUBCASE("conjugate reverses the coefficients") {
    const auto p = make_phase_modulator(2, 7);
    const auto &s = p.c1.support();
    CHECK(p.c2.support().lo[0] == -s.hi[0]);
    for (int m = s.lo[0]; m <= s.hi[0]; ++m) {
      CHECK(p.c2.coeff(-m) == std::conj(p.c1.coeff(m)));
    }
  }
}
