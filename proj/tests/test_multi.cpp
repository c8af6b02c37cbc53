#include <cmath>
#include <functional>

#include "doctest.h"

#include "linpred/multi.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace linpred;
using namespace linpred::multi;
using namespace testing;
using oracle::pi;

namespace {

const auto half_box = Phantom::line(1.0, {Primitive::boxcar(0.0, 0.25)});

std::vector<Modulator> harmonic_pair() {
  return {Modulator::line(0, {1.0}), Modulator::line(1, {1.0})};
}

// B int |sum_q c_q(x) rho(x) H_q(x)|^2 by Simpson on the phantom's pieces.
double rhs_oracle(const MultiScene &s, const MultiFilter &f) {
  const double B = s.base.fov();
  const auto e = s.base.edges();
  const int L = f.window().L[0];
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < e.size(); ++i) {
    if (e[i + 1] <= e[i]) {
      continue;
    }
    const cplx r = s.base.value(0.5 * (e[i] + e[i + 1]));
    std::function<double(double)> g = [&](double x) {
      cplx sum = 0.0;
      for (int q = 0; q < f.q_count(); ++q) {
        cplx H = 0.0;
        const auto taps = f.channel(q);
        for (std::size_t k = 0; k < taps.size(); ++k) {
          H += taps[k] * std::polar(1.0, 2.0 * pi * (static_cast<int>(k) - L) * x / B);
        }
        sum += s.modulators[q].value(s.base.fovs(), x) * H;
      }
      return std::norm(r * sum);
    };
    acc += oracle::simpson<double>(g, e[i], e[i + 1], 4000);
  }
  return B * acc;
}

double covered_error(const MultiKSignal &a, const MultiKSignal &b, int lo, int hi) {
  double m = 0.0;
  for (int q = 0; q < a.q_count(); ++q) {
    for (int n = lo; n <= hi; ++n) {
      m = std::max(m, std::abs(a.channel(q).at(n) - b.channel(q).at(n)));
    }
  }
  return m;
}

} // namespace

TEST_CASE("scene samples") {
  const auto g = KGrid::centered(16);
  SUBCASE("single identity modulator") {
    const MultiScene s{half_box, {Modulator::line(0, {1.0})}, Scenario::Parallel};
    CHECK(scene_samples(s, g).channel(0).vec() == fourier_samples(half_box, g).vec());
  }
  SUBCASE("harmonic pair is a shift") {
    const MultiScene s{half_box, harmonic_pair(), Scenario::Parallel};
    const auto x = scene_samples(s, g);
    for (int n = -7; n <= 7; ++n) {
      CHECK(std::abs(x.channel(1).at(n) - x.channel(0).at(n - 1)) < 1e-15);
    }
  }
  SUBCASE("virtual-conjugate scene") {
    const auto zero_phase = virtual_conjugate_scene(half_box, Modulator::line(0, {1.0}));
    const auto z = scene_samples(zero_phase, g);
    CHECK(max_err(z.channel(0).vec(), z.channel(1).vec()) < 1e-15);

    const auto ph = make_phase_modulator(2, 7);
    const auto s = virtual_conjugate_scene(
        Phantom::line(1.0, {Primitive::boxcar(0.1, 0.2, 0.6)}), ph.c1);
    const auto x = scene_samples(s, KGrid::line(-10, 10));
    for (int n = -10; n <= 10; ++n) {
      CHECK(std::abs(x.channel(1).at(n) - std::conj(x.channel(0).at(-n))) < 1e-14);
    }
  }
  SUBCASE("validation") {
    MultiScene bad{half_box, {Modulator::line(0, {1.0}), Modulator::line(1, {1.0})},
                   Scenario::VirtualConjugate};
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_THROWS_AS((MultiScene{half_box, {}, Scenario::Parallel}.validate()), Error);
    CHECK(parse_scenario("multicontrast") == Scenario::Multicontrast);
    CHECK_THROWS_AS(parse_scenario("sms"), Error);
  }
}

TEST_CASE("multichannel annihilation identity") {
  const auto g = KGrid::line(-256, 256);
  SUBCASE("one active channel reduces to the single-image check") {
    const auto mods = make_sensitivities(2, 1, 4);
    const MultiScene s{half_box, mods, Scenario::Parallel};
    const MultiFilter f(Window::line(1, 1), {{0.0, 0.0, 0.0}, {0.3, -1.0, cplx(0.2, 0.4)}}, 1);
    const auto chk = verify_theorem2(s, f, g);
    CHECK(std::abs(chk.rhs - rhs_oracle(s, f)) <= 1e-8 * chk.rhs);
    CHECK(chk.agrees());
  }
  SUBCASE("shift identity cancels exactly") {
    const MultiScene s{half_box, harmonic_pair(), Scenario::Parallel};
    const MultiFilter f(Window::line(1, 0), {{0.0, -1.0}, {1.0, 0.0}}, 0);
    const auto chk = verify_theorem2(s, f, g);
    CHECK(chk.lhs <= 1e-12);
    CHECK(chk.rhs <= 1e-12);
    CHECK(rhs_oracle(s, f) <= 1e-12);
  }
  SUBCASE("dead channel") {
    const MultiScene s{half_box, {Modulator::line(0, {0.0}), Modulator::line(0, {1.0})},
                       Scenario::Multicontrast};
    const MultiFilter f(Window::line(0, 1), {{-1.0, 0.5}, {0.0, 0.0}}, 0);
    const auto chk = verify_theorem2(s, f, g);
    CHECK(chk.lhs == 0.0);
    CHECK(chk.rhs == 0.0);
  }
  SUBCASE("random filters and sensitivities") {
    const auto mods = make_sensitivities(3, 2, 9);
    const MultiScene s{
        Phantom::line(1.0, {Primitive::boxcar(-0.2, 0.15), Primitive::boxcar(0.2, 0.1, 0.5)}),
        mods, Scenario::Parallel};
    for (int len : {1, 5, 9}) {
      std::vector<std::vector<cplx>> taps;
      for (int q = 0; q < 3; ++q) {
        taps.push_back(random_values(len, 10 * len + q));
      }
      taps[0][len / 2] = -1.0;
      const MultiFilter f(Window::line(len / 2, len - 1 - len / 2), taps, 0);
      const auto chk = verify_theorem2(s, f, g);
      CHECK(std::abs(chk.rhs - rhs_oracle(s, f)) <= 1e-8 * chk.rhs);
      CHECK(chk.agrees());
    }
  }
}

TEST_CASE("SMASH-style fitting") {
  SUBCASE("harmonic pair") {
    const auto r = smash_fit(harmonic_pair(), 0, 1, 0);
    CHECK(r.filter.at(0, 0) == cplx(-1.0));
    CHECK(std::abs(r.filter.at(1, -1) - 1.0) < 1e-10);
    CHECK(std::abs(r.filter.at(1, 0)) < 1e-10);
    CHECK(std::abs(r.filter.at(0, -1)) < 1e-10);
    CHECK(r.residual <= 1e-10);

    const MultiScene s{half_box, harmonic_pair(), Scenario::Parallel};
    const auto x = scene_samples(s, KGrid::centered(64));
    const auto out = conv_apply(x, r.filter);
    CHECK(norm2(out.values()) <= 1e-10 * norm2(x.channel(0).values()));
  }
  SUBCASE("identical constant channels") {
    const auto r = smash_fit({Modulator::line(0, {2.0}), Modulator::line(0, {2.0})}, 0, 0, 0);
    CHECK(std::abs(r.filter.at(1, 0) - 1.0) < 1e-12);
    CHECK(r.residual <= 1e-12);
  }
  SUBCASE("a single constant channel cannot be annihilated") {
    const auto r = smash_fit({Modulator::line(0, {1.0})}, 0, 0, 0);
    CHECK(std::abs(r.residual - 1.0) < 1e-12);
  }
  SUBCASE("spatial grid too coarse") {
    CHECK_THROWS_AS(smash_fit(harmonic_pair(), 0, 1, 1, 1.0, 16), Error);
  }
}

TEST_CASE("channel-1 annihilators also annihilate the shifted channel") {
  const MultiScene s{Phantom::line(1.0, {Primitive::boxcar(0.1, 0.2)}), harmonic_pair(),
                     Scenario::Parallel};
  const auto g = KGrid::centered(48);
  const auto x = scene_samples(s, g);
  const auto cm = lp::build_calib_matrix(MultiKSignal::single(x.channel(0)),
                                         IndexBox::line(-12, 11), Window::line(2, 2));
  const auto bank = lp::nullspace_bank(cm, 0.2);
  REQUIRE(!bank.empty());
  for (const auto &f : bank.filters) {
    const auto a = conv_apply(x.channel(0), f.channel_filter(0));
    const auto b = conv_apply(x.channel(1), f.channel_filter(0));
    // b[n] = a[n - 1]
    for (std::size_t i = 1; i < a.size(); ++i) {
      CHECK(std::abs(b.vec()[i] - a.vec()[i - 1]) < 1e-13);
    }
  }
}

TEST_CASE("SMS superposition") {
  const auto g = KGrid::centered(16);
  const SmsScene pts{{Phantom::line(1.0, {Primitive::point(0.0)}),
                      Phantom::line(1.0, {Primitive::point(0.5)})},
                     {}};
  const auto s = sms_superpose(pts, g);
  for (int n = -8; n <= 7; ++n) {
    CHECK(std::abs(s.channel(0).at(n) - (n % 2 == 0 ? 2.0 : 0.0)) < 1e-14);
  }
  const SmsScene three{{half_box, half_box, half_box}, {}};
  CHECK(max_err(sms_superpose(three, g).channel(0).vec(),
                [&] {
                  auto v = fourier_samples(half_box, g).vec();
                  for (auto &z : v) {
                    z *= 3.0;
                  }
                  return v;
                }()) < 1e-15);
  const SmsScene with_empty{{half_box, Phantom::line(1.0, {Primitive::boxcar(0.0, 0.25, 0.0)})}, {}};
  CHECK(sms_superpose(with_empty, g).channel(0).vec() == fourier_samples(half_box, g).vec());
  CHECK_THROWS_AS((SmsScene{{half_box}, {}}.validate()), Error);
  CHECK_THROWS_AS(
      (SmsScene{{half_box, Phantom::line(2.0, {Primitive::boxcar(0.0, 0.25)})}, {}}.validate()),
      Error);
}

TEST_CASE("SMS separators") {
  const auto g = KGrid::centered(16);
  const SmsScene pts{{Phantom::line(1.0, {Primitive::point(0.0)}),
                      Phantom::line(1.0, {Primitive::point(0.5)})},
                     {}};
  const auto sl = sms_slices(pts, g);

  SUBCASE("closed-form two-tap separator") {
    for (double mu : {0.0, 1.0}) {
      const auto f = sms_fit_separator(sl, 1, IndexBox::line(-4, 3), 0, 0, Window::line(1, 0), mu);
      CHECK(std::abs(f.filter.at(0, -1) - 0.5) < 1e-12);
      CHECK(std::abs(f.filter.at(0, 0) - 0.5) < 1e-12);
      CHECK(f.residual < 1e-12);
      CHECK(f.leakage < 1e-12);
    }
  }
  SUBCASE("separation of the point pair") {
    const auto fits = sms_fit_separators(sl, 1, IndexBox::line(-4, 3), Window::line(1, 0));
    std::vector<Separator> seps;
    for (const auto &f : fits) {
      seps.push_back(f.filter);
    }
    const auto out = sms_separate(superpose(sl, 1), seps);
    REQUIRE(out.q_count() == 2);
    for (std::size_t i = 0; i < out.channel(0).size(); ++i) {
      const int n = out.grid().coords(i)[0];
      CHECK(std::abs(out.channel(0).vec()[i] - 1.0) < 1e-12);
      CHECK(std::abs(out.channel(1).vec()[i] - (n % 2 == 0 ? 1.0 : -1.0)) < 1e-12);
    }
    const auto leak = sms_leakage(sl, 1, seps);
    CHECK(leak[0][1] < 1e-12);
    CHECK(leak[1][0] < 1e-12);
    CHECK(std::abs(leak[0][0] - 1.0) < 1e-12);
  }
  SUBCASE("single slice with the unit separator") {
    const auto one = MultiKSignal::single(KSignal(g, random_values(16, 2)));
    const Separator unit{Window::line(0, 0), {{1.0}}};
    CHECK(sms_separate(one, {unit}).channel(0).vec() == one.channel(0).vec());
  }
  SUBCASE("identical slices cannot be separated") {
    const SmsScene same{{half_box, half_box}, {}};
    const auto s2 = sms_slices(same, g);
    const auto f = sms_fit_separator(s2, 1, IndexBox::line(-8, 7), 0, 0, Window::line(0, 0), 1.0);
    // min_g |1 - 2g|^2 + |g|^2 at g = 2/5
    CHECK(std::abs(f.filter.at(0, 0) - 0.4) < 1e-9);
    double rms = 0.0;
    for (const auto &z : s2.channel(0).vec()) {
      rms += std::norm(z);
    }
    rms = std::sqrt(rms / 16.0);
    CHECK(std::abs(f.residual - 0.2 * rms) < 1e-9);
    CHECK(std::abs(f.leakage - 0.4 * rms) < 1e-9);
  }
  SUBCASE("empty target slice") {
    const SmsScene empty{{Phantom::line(1.0, {Primitive::boxcar(0.0, 0.25, 0.0)}), half_box}, {}};
    const auto s2 = sms_slices(empty, g);
    const auto f = sms_fit_separator(s2, 1, IndexBox::line(-8, 7), 0, 0, Window::line(1, 1), 1.0);
    for (const auto &z : f.filter.taps[0]) {
      CHECK(std::abs(z) < 1e-9);
    }
    CHECK(f.residual <= 1e-12);
  }
  SUBCASE("separation is linear") {
    const SmsScene bx{{Phantom::line(1.0, {Primitive::boxcar(-0.25, 0.2)}),
                       Phantom::line(1.0, {Primitive::boxcar(0.25, 0.2)})},
                      {}};
    const auto g2 = KGrid::centered(32);
    const auto s2 = sms_slices(bx, g2);
    const auto fits = sms_fit_separators(s2, 1, IndexBox::line(-8, 7), Window::line(2, 2));
    std::vector<Separator> seps = {fits[0].filter, fits[1].filter};
    const auto sum = sms_separate(superpose(s2, 1), seps);
    const auto a = sms_separate(MultiKSignal::single(s2.channel(0)), seps);
    const auto b = sms_separate(MultiKSignal::single(s2.channel(1)), seps);
    for (int r = 0; r < 2; ++r) {
      for (std::size_t i = 0; i < sum.channel(r).size(); ++i) {
        CHECK(std::abs(sum.channel(r).vec()[i] - a.channel(r).vec()[i] - b.channel(r).vec()[i]) <
              1e-13);
      }
    }
  }
}

TEST_CASE("multi-coil SMS keeps leakage low") {
  SmsScene sc;
  sc.slices = {Phantom::line(1.0, {Primitive::boxcar(-0.25, 0.2)}),
               Phantom::line(1.0, {Primitive::boxcar(0.25, 0.2)})};
  for (int r = 0; r < 2; ++r) {
    sc.coils.push_back(make_sensitivities(8, 2, 20 + r));
  }
  sc.validate();
  const auto g = KGrid::centered(64);
  const auto sl = sms_slices(sc, g);
  CHECK(sl.q_count() == 16);
  const auto fits = sms_fit_separators(sl, 8, IndexBox::line(-16, 15), Window::line(1, 1), 1.0);
  std::vector<Separator> seps;
  for (const auto &f : fits) {
    seps.push_back(f.filter);
  }
  const auto leak = sms_leakage(sl, 8, seps);
  REQUIRE(leak.size() == 2);
  CHECK(leak[0][1] <= 0.05);
  CHECK(leak[1][0] <= 0.05);
}

TEST_CASE("undersampled SMS separation") {
  const auto g = KGrid::centered(16);
  const SmsScene pts{{Phantom::line(1.0, {Primitive::point(0.0)}),
                      Phantom::line(1.0, {Primitive::point(0.5)})},
                     {}};
  const auto sl = sms_slices(pts, g);
  const auto fits = sms_fit_separators(sl, 1, IndexBox::line(-4, 3), Window::line(1, 0));
  std::vector<Separator> seps = {fits[0].filter, fits[1].filter};
  std::vector<std::uint8_t> bits(16, 0);
  for (int i = 0; i < 16; i += 2) {
    bits[i] = 1;
  }
  bits[7] = bits[8] = bits[9] = 1;
  const SamplingMask mask(g, bits);
  SmsUndersampledParams p;
  p.annihilation.tol = 1e-14;
  p.intra.filters.push_back(MultiFilter::from(Filter::line(0, 2, {-1.0, 0.0, 1.0})));
  p.intra.residuals = {0.0};
  const auto r = sms_separate_undersampled(superpose(sl, 1), mask, seps, p);
  CHECK(r.slices.q_count() == 2);
  CHECK(covered_error(r.slices, sl, -8, 6) < 1e-8);
  CHECK(covered_error(r.superposed, superpose(sl, 1), -8, 6) < 1e-8);

  SmsUndersampledParams bad = p;
  bad.annihilation.virtual_channels = true;
  CHECK_THROWS_AS(sms_separate_undersampled(superpose(sl, 1), mask, seps, bad), Error);
}

TEST_CASE("SMS annihilation identity") {
  const auto g = KGrid::line(-512, 512);
  SUBCASE("one slice with the unit filter") {
    const SmsScene one{{half_box, Phantom::line(1.0, {Primitive::boxcar(0.0, 0.25, 0.0)})}, {}};
    const auto chk = verify_theorem3(one, 0, Filter::line(0, 0, {1.0}), g);
    CHECK(chk.lhs < 1e-20);
    CHECK(chk.rhs < 1e-20);
  }
  SUBCASE("disjoint slices with a truncated indicator") {
    const auto a = Phantom::line(1.0, {Primitive::boxcar(-0.25, 0.2)});
    const auto b = Phantom::line(1.0, {Primitive::boxcar(0.25, 0.2)});
    std::vector<cplx> taps;
    for (int k = -4; k <= 4; ++k) {
      taps.push_back(a.sample(k));
    }
    const SmsScene sc{{a, b}, {}};
    const auto chk = verify_theorem3(sc, 0, Filter::line(4, 4, taps), g);
    const auto full = verify_theorem3(sc, 0, Filter::line(0, 0, {0.5}), g);
    CHECK(chk.rhs < 0.2 * full.rhs);
    CHECK(chk.agrees());
  }
  SUBCASE("identical slices stay bounded away from zero") {
    const SmsScene sc{{half_box, half_box}, {}};
    const auto chk = verify_theorem3(sc, 0, Filter::line(0, 1, {0.3, 0.2}), g);
    CHECK(chk.rhs > 1e-3);
    CHECK(chk.agrees());
  }
}
