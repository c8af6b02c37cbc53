#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"

#include "linpred/recon.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace linpred;
using namespace testing;
using oracle::pi;

namespace {

KSignal point_sources(const std::vector<double> &xs, const std::vector<cplx> &amps,
                      const KGrid &g) {
  std::vector<cplx> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int n = g.coords(i)[0];
    for (std::size_t j = 0; j < xs.size(); ++j) {
      v[i] += amps[j] * std::polar(1.0, -2.0 * pi * n * xs[j] / g.fov());
    }
  }
  return KSignal(g, v);
}

// Degree-K annihilator with h[0] = -1 for the given source locations (B = 1).
Filter root_filter(const std::vector<double> &xs) {
  std::vector<cplx> p = {1.0};
  for (double xj : xs) {
    const cplx u = std::polar(1.0, -2.0 * pi * xj);
    std::vector<cplx> q(p.size() + 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i] += p[i];
      q[i + 1] -= u * p[i];
    }
    p = q;
  }
  std::vector<cplx> taps(p.size());
  taps[0] = -1.0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    taps[k] = -p[k];
  }
  return Filter::line(0, static_cast<int>(xs.size()), taps);
}

SamplingMask random_half(const KGrid &g, std::uint64_t seed) {
  std::vector<std::size_t> idx(g.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::uint8_t> bits(g.size(), 0);
  for (std::size_t i = 0; i < g.size() / 2; ++i) {
    bits[idx[i]] = 1;
  }
  return SamplingMask(g, bits);
}

oracle::CMat to_cmat(const RowMatrix &m) {
  oracle::CMat a(m.rows(), std::vector<cplx>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      a[r][c] = m(r, c);
    }
  }
  return a;
}

int numeric_rank(const std::vector<double> &sv, double rel = 1e-10) {
  return static_cast<int>(std::count_if(sv.begin(), sv.end(),
                                        [&](double s) { return s > rel * sv[0]; }));
}

const std::vector<double> two_x = {-0.2, 0.3};
const std::vector<cplx> two_a = {1.0, cplx(0.5, -0.4)};

} // namespace

TEST_CASE("lift and unlift") {
  const auto g = KGrid::centered(12);
  const MultiKSignal x(g, {random_values(12, 1), random_values(12, 2)});
  for (auto v : {recon::Variant::C, recon::Variant::S}) {
    const auto m = recon::lift(x, Window::line(1, 2), v);
    const auto back = recon::unlift(m);
    for (int q = 0; q < 2; ++q) {
      // S on an even grid leaves the unpaired edge sample covered only once
      CHECK(max_err(back.channel(q).vec(), x.channel(q).vec()) < 1e-14);
    }
  }

  SUBCASE("entries in C and S layout") {
    const auto m = recon::lift(x, Window::line(1, 2), recon::Variant::S);
    CHECK(m.m.cols() == 4 * 4);
    // first row is n = n_min + P = -4
    for (int k = -1; k <= 2; ++k) {
      const int col = k + 1;
      CHECK(m.m(0, col) == x.channel(0).at(-4 - k));
      const int mirror = -(-4 - k);
      const cplx v = mirror <= 5 ? std::conj(x.channel(0).at(mirror)) : cplx{};
      CHECK(m.m(0, 2 * 4 + col) == v);
    }
  }
  SUBCASE("adjoint identity") {
    for (auto v : {recon::Variant::C, recon::Variant::S}) {
      const auto mx = recon::lift(x, Window::line(2, 1), v);
      auto y = mx;
      const auto vals = random_values(static_cast<std::size_t>(y.m.size()), 9);
      for (Eigen::Index i = 0; i < y.m.size(); ++i) {
        y.m.data()[i] = vals[i];
      }
      // Re <lift(x), Y> = Re <x, lift^*(Y)>
      const double lhs = (mx.m.conjugate().cwiseProduct(y.m)).sum().real();
      const auto ay = recon::lift_adjoint(y);
      double rhs = 0.0;
      for (int q = 0; q < 2; ++q) {
        for (std::size_t i = 0; i < 12; ++i) {
          rhs += (std::conj(x.channel(q).vec()[i]) * ay.channel(q).vec()[i]).real();
        }
      }
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
    }
  }
  SUBCASE("adjoint of lift is multiplication by the window counts") {
    const auto m = recon::lift(x, Window::line(2, 1), recon::Variant::C);
    const auto ax = recon::lift_adjoint(m);
    const auto counts = recon::window_counts(g, Window::line(2, 1), recon::Variant::C, 2);
    for (int q = 0; q < 2; ++q) {
      for (std::size_t i = 0; i < 12; ++i) {
        CHECK(std::abs(ax.channel(q).vec()[i] - counts[i] * x.channel(q).vec()[i]) <
              1e-13);
      }
    }
  }
  SUBCASE("window larger than the grid") {
    CHECK_THROWS_AS(recon::lift(x, Window::line(8, 8), recon::Variant::C), Error);
  }
}

TEST_CASE("structured matrix rank") {
  const auto g = KGrid::centered(32);
  const auto x = MultiKSignal::single(point_sources(two_x, two_a, g));
  const auto m = recon::lift(x, Window::line(0, 2), recon::Variant::C);
  const auto sv = oracle::singular_values(to_cmat(m.m));
  REQUIRE(sv.size() == 3);
  CHECK(sv[2] <= 1e-12 * sv[0]);
  CHECK(sv[1] > 1e-3 * sv[0]);

  // A real, even image has conjugate-symmetric samples, so the virtual
  // channels repeat the originals and S has the rank of C.
  const auto gs = KGrid::line(-16, 16);
  const auto sym = MultiKSignal::single(
      point_sources({-0.25, 0.0, 0.25}, {1.0, 2.0, 1.0}, gs));
  const auto c = recon::lift(sym, Window::line(2, 3), recon::Variant::C);
  const auto s = recon::lift(sym, Window::line(2, 3), recon::Variant::S);
  CHECK(numeric_rank(oracle::singular_values(to_cmat(c.m))) ==
        numeric_rank(oracle::singular_values(to_cmat(s.m))));
}

TEST_CASE("virtual conjugate channels") {
  const auto g = KGrid::line(-2, 2);
  const KSignal x(g, {1.0, 2.0, 3.0, cplx(1.0, 2.0), 5.0});
  const auto vc = recon::virtual_conjugate(MultiKSignal::single(x));
  REQUIRE(vc.data.q_count() == 2);
  CHECK(vc.data.channel(1).at(-1) == cplx(1.0, -2.0));
  CHECK(vc.unpaired == 0);

  const auto ge = KGrid::centered(8);
  std::size_t unpaired = 0;
  const auto r = recon::conjugate_reverse(KSignal(ge, random_values(8, 3)), &unpaired);
  CHECK(unpaired == 1);
  CHECK(r.at(-4) == cplx(0.0));

  const auto sym = point_sources({-0.25, 0.0, 0.25}, {1.0, 2.0, 1.0}, g);
  const auto vs = recon::virtual_conjugate(MultiKSignal::single(sym));
  CHECK(max_err(vs.data.channel(1).vec(), sym.vec()) < 1e-14);

  const auto twice = recon::virtual_conjugate(vc.data);
  CHECK(twice.data.q_count() == 4);
  CHECK(twice.data.channel(0).vec() == x.vec());
  CHECK(twice.data.channel(3).vec() == x.vec());
}

TEST_CASE("low-rank completion") {
  const auto g = KGrid::centered(32);
  const auto truth = MultiKSignal::single(point_sources(two_x, two_a, g));
  const auto mask = random_half(g, 1);
  const auto measured = zero_fill(truth, mask);

  SUBCASE("two point sources from half the samples") {
    recon::LowrankParams p{Window::line(0, 3), recon::Variant::C, 2, 0.05, 20000, 1e-15, {}};
    const auto res = recon::lowrank_complete(measured, mask, p);
    CHECK(rel_err(res.data.channel(0).vec(), truth.channel(0).vec()) <= 1e-6);
    CHECK(res.report.iterations <= p.max_iters);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (mask.acquired()[i]) {
        CHECK(res.data.channel(0).vec()[i] == measured.channel(0).vec()[i]);
      }
    }
  }
  SUBCASE("fully sampled input is a fixed point") {
    recon::LowrankParams p{Window::line(0, 3), recon::Variant::C, 1, 0.05, 50, 1e-9, {}};
    const auto noisy = MultiKSignal::single(KSignal(g, random_values(32, 5)));
    const auto res = recon::lowrank_complete(noisy, SamplingMask::full(g), p);
    CHECK(res.data.channel(0).vec() == noisy.channel(0).vec());
    CHECK(res.report.iterations == 1);
  }
  SUBCASE("full rank imposes nothing") {
    recon::LowrankParams p{Window::line(0, 3), recon::Variant::C, 4, 0.05, 50, 1e-9, {}};
    const auto res = recon::lowrank_complete(measured, mask, p);
    CHECK(max_err(res.data.channel(0).vec(), measured.channel(0).vec()) < 1e-12);
  }
  SUBCASE("rank out of range") {
    recon::LowrankParams p{Window::line(0, 3), recon::Variant::C, 5, 0.05, 50, 1e-9, {}};
    CHECK_THROWS_AS(recon::lowrank_complete(measured, mask, p), Error);
  }
}

TEST_CASE("annihilation reconstruction") {
  const auto g = KGrid::line(-8, 7);
  const auto truth = MultiKSignal::single(point_sources(two_x, two_a, g));
  lp::FilterBank bank;
  bank.filters.push_back(MultiFilter::from(root_filter(two_x)));
  bank.residuals.push_back(0.0);
  recon::AnnihilationParams hard;
  hard.tol = 1e-14;

  SUBCASE("two samples determine two exponentials") {
    std::vector<std::uint8_t> bits(g.size(), 0);
    bits[g.index(0)] = bits[g.index(1)] = 1;
    const SamplingMask mask(g, bits);
    const auto res = recon::annihilation_recon(zero_fill(truth, mask), mask, bank, hard);
    CHECK(max_err(res.data.channel(0).vec(), truth.channel(0).vec()) <= 1e-8);
    const auto &obj = res.report.objective;
    for (std::size_t i = 1; i < obj.size(); ++i) {
      CHECK(obj[i] <= obj[i - 1] + 1e-12 * std::max(1.0, obj[0]));
    }
  }
  SUBCASE("nothing missing") {
    const auto res =
        recon::annihilation_recon(truth, SamplingMask::full(g), bank, hard);
    CHECK(res.data.channel(0).vec() == truth.channel(0).vec());
    CHECK(res.report.iterations == 0);
  }
  SUBCASE("anchor-only filter zero-fills") {
    lp::FilterBank id;
    id.filters.push_back(MultiFilter::from(Filter::anchor_only(Window::line(0, 2))));
    id.residuals.push_back(0.0);
    const auto mask = random_half(g, 2);
    const auto res = recon::annihilation_recon(zero_fill(truth, mask), mask, id, hard);
    CHECK(max_err(res.data.channel(0).vec(), zero_fill(truth, mask).channel(0).vec()) < 1e-12);
  }
  SUBCASE("soft mode with a large weight matches hard mode") {
    const auto mask = random_half(g, 3);
    const auto h = recon::annihilation_recon(zero_fill(truth, mask), mask, bank, hard);
    recon::AnnihilationParams soft = hard;
    soft.mode = recon::AnnihilationMode::Soft;
    soft.lambda = 1e6;
    soft.max_iters = 5000;
    const auto s = recon::annihilation_recon(zero_fill(truth, mask), mask, bank, soft);
    std::vector<cplx> hu, su;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!mask.acquired()[i]) {
        hu.push_back(h.data.channel(0).vec()[i]);
        su.push_back(s.data.channel(0).vec()[i]);
      }
    }
    CHECK(rel_err(su, hu) <= 1e-4);
  }
  SUBCASE("soft mode needs a positive weight") {
    recon::AnnihilationParams soft;
    soft.mode = recon::AnnihilationMode::Soft;
    soft.lambda = 0.0;
    CHECK_THROWS_AS(recon::annihilation_recon(truth, SamplingMask::full(g), bank, soft), Error);
    CHECK_THROWS_AS(recon::annihilation_recon(truth, SamplingMask::full(g), lp::FilterBank{}, hard),
                    Error);
  }
  SUBCASE("agrees with low-rank completion on exactly low-rank data") {
    const auto g32 = KGrid::centered(32);
    const auto t32 = MultiKSignal::single(point_sources(two_x, two_a, g32));
    const auto mask = random_half(g32, 1);
    const auto a = recon::annihilation_recon(zero_fill(t32, mask), mask, bank, hard);
    recon::LowrankParams p{Window::line(0, 3), recon::Variant::C, 2, 0.05, 20000, 1e-15, {}};
    const auto l = recon::lowrank_complete(zero_fill(t32, mask), mask, p);
    CHECK(rel_err(a.data.channel(0).vec(), l.data.channel(0).vec()) <= 1e-6);
  }
}

TEST_CASE("partial Fourier") {
  const auto g = KGrid::line(-16, 15);
  std::vector<std::uint8_t> bits(g.size(), 0);
  for (int n = -2; n <= 15; ++n) {
    bits[g.index(n)] = 1;
  }
  SUBCASE("zero-phase boxcar by symmetry") {
    const auto box = Phantom::line(1.0, {Primitive::boxcar(0.0, 0.2)});
    const auto truth = MultiKSignal::single(fourier_samples(box, g));
    const SamplingMask mask(g, bits, IndexBox::line(-2, 2));
    const auto res = recon::pf_recon(zero_fill(truth, mask), mask, recon::PfParams{});
    double err = 0.0;
    for (int n = -15; n <= -3; ++n) {
      err = std::max(err, std::abs(res.data.channel(0).at(n) - truth.channel(0).at(n)));
    }
    CHECK(err <= 1e-12);
  }
  SUBCASE("filter method needs calibration data") {
    const auto box = Phantom::line(1.0, {Primitive::boxcar(0.0, 0.2)});
    const auto truth = MultiKSignal::single(fourier_samples(box, g));
    const SamplingMask mask(g, bits);
    recon::PfParams p;
    p.method = recon::PfMethod::AnnihilationVirtual;
    CHECK_THROWS_AS(recon::pf_recon(zero_fill(truth, mask), mask, p), Error);
  }
}
