#include <filesystem>

#include "doctest.h"

#include "linpred/json_io.hpp"
#include "support.hpp"

using namespace linpred;
using namespace testing;
using json = nlohmann::json;

TEST_CASE("complex values") {
  CHECK(io::complex_from(json(2.5)) == cplx(2.5, 0.0));
  CHECK(io::complex_from(json::parse("[1, -2]")) == cplx(1.0, -2.0));
  CHECK(io::complex_from(io::to_json(cplx(0.1, 3e-300))) == cplx(0.1, 3e-300));
  CHECK(code_of([] { io::complex_from(json::parse("[1]")); }) == ErrorCode::Parse);
  CHECK(code_of([] { io::complex_from(json("x")); }) == ErrorCode::Parse);
}

TEST_CASE("parse errors name the byte offset") {
  try {
    io::parse("{\"a\": [1, 2,, 3]}", "cfg");
    FAIL("expected a parse error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("byte 13") != std::string::npos);
  }
  CHECK(code_of([] { io::read_file("/nonexistent/file.json"); }) == ErrorCode::Io);
}

TEST_CASE("phantom round trip") {
  const Phantom p(2, {2.0, 3.0},
                  {{PrimitiveKind::Ellipse, {0.1, -0.2}, {0.5, 0.7}, cplx(1.0, -0.5)},
                   {PrimitiveKind::Boxcar, {-0.3, 0.4}, {0.2, 0.1}, 0.25},
                   {PrimitiveKind::Point, {0.6, 0.6}, {0.0, 0.0}, 2.0}});
  const auto back = io::phantom_from(io::to_json(p));
  CHECK(back.dims() == 2);
  CHECK(back.fovs() == p.fovs());
  REQUIRE(back.primitives().size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.primitives()[i].kind == p.primitives()[i].kind);
    CHECK(back.primitives()[i].center == p.primitives()[i].center);
    CHECK(back.primitives()[i].extent == p.primitives()[i].extent);
    CHECK(back.primitives()[i].amplitude == p.primitives()[i].amplitude);
  }
  CHECK(code_of([] {
          io::phantom_from(json::parse(R"({"dims":1,"fov":[1],"primitives":[
            {"kind":"star","center":[0],"extent":[0.1],"amplitude":1}]})"));
        }) == ErrorCode::Parse);
  CHECK_THROWS_AS(io::phantom_from(json::parse(R"({"dims":1,"fov":[1],"primitives":[
            {"kind":"boxcar","center":[0.45],"extent":[0.1],"amplitude":1}]})")),
                  Error);
}

TEST_CASE("scenes") {
  SUBCASE("bare phantom") {
    const auto s = io::scene_from(json::parse(
        R"({"dims":1,"fov":[1],"primitives":[{"kind":"point","center":[0.25],"extent":[0],"amplitude":1}]})"));
    CHECK(std::holds_alternative<Phantom>(s));
  }
  SUBCASE("explicit modulators round trip") {
    const multi::MultiScene ms{Phantom::line(1.0, {Primitive::boxcar(0.0, 0.25)}),
                               {Modulator::line(0, {1.0}), Modulator::line(-1, {0.5, cplx(0, 1)})},
                               multi::Scenario::Multicontrast};
    const auto back = std::get<multi::MultiScene>(io::scene_from(io::to_json(ms)));
    CHECK(back.scenario == multi::Scenario::Multicontrast);
    REQUIRE(back.modulators.size() == 2);
    CHECK(back.modulators[1].coeffs() == ms.modulators[1].coeffs());
    CHECK(back.modulators[1].support() == ms.modulators[1].support());
  }
  SUBCASE("generators") {
    const auto s = std::get<multi::MultiScene>(io::scene_from(json::parse(R"({
      "scenario":"parallel",
      "phantom":{"dims":1,"fov":[1],"primitives":[{"kind":"boxcar","center":[0],"extent":[0.2],"amplitude":1}]},
      "sensitivities":{"q_count":3,"bandwidth":2,"seed":5}})")));
    const auto ref = make_sensitivities(3, 2, 5);
    REQUIRE(s.modulators.size() == 3);
    CHECK(s.modulators[2].coeffs() == ref[2].coeffs());

    const auto v = std::get<multi::MultiScene>(io::scene_from(json::parse(R"({
      "scenario":"virtual-conjugate",
      "phantom":{"dims":1,"fov":[1],"primitives":[{"kind":"boxcar","center":[0],"extent":[0.2],"amplitude":1}]},
      "phase":{"bandwidth":1,"seed":2}})")));
    CHECK(v.modulators.size() == 2);
    CHECK(v.modulators[1].coeffs() == v.modulators[0].conjugate().coeffs());
    CHECK_THROWS_AS(io::scene_from(json::parse(R"({
      "scenario":"parallel",
      "phantom":{"dims":1,"fov":[1],"primitives":[{"kind":"boxcar","center":[0],"extent":[0.2],"amplitude":1}]},
      "phase":{"bandwidth":1,"seed":2}})")),
                    Error);
  }
  SUBCASE("SMS scenes") {
    multi::SmsScene s{{Phantom::line(1.0, {Primitive::boxcar(-0.25, 0.2)}),
                       Phantom::line(1.0, {Primitive::boxcar(0.25, 0.2)})},
                      {}};
    s.coils = {make_sensitivities(2, 1, 1), make_sensitivities(2, 1, 2)};
    const auto back = std::get<multi::SmsScene>(io::scene_from(io::to_json(s)));
    CHECK(back.slice_count() == 2);
    CHECK(back.coil_count() == 2);
    CHECK(back.coils[1][0].coeffs() == s.coils[1][0].coeffs());
  }
}

TEST_CASE("filter banks and separators") {
  lp::FilterBank bank;
  bank.filters.emplace_back(Window::line(1, 1),
                            std::vector<std::vector<cplx>>{random_values(3, 1), random_values(3, 2)});
  bank.filters.emplace_back(Window::line(1, 1),
                            std::vector<std::vector<cplx>>{{0.0, -1.0, 0.5}, {0.2, 0.0, 0.0}}, 0);
  bank.residuals = {0.125, 0.5};
  const auto j = io::bank_to_json(bank, "nullspace");
  CHECK(j.at("kind") == "nullspace");
  CHECK(j.at("q_count") == 2);
  const auto back = io::bank_from(j);
  REQUIRE(back.size() == 2);
  CHECK(back.filters[0].flatten() == bank.filters[0].flatten());
  CHECK(back.filters[1].anchor() == std::optional<int>(0));
  CHECK(!back.filters[0].anchor());
  CHECK(back.residuals == bank.residuals);
  CHECK(io::window_from(io::to_json(Window::plane(1, 2, 0, 3))) == Window::plane(1, 2, 0, 3));

  multi::SeparatorFit f;
  f.filter = multi::Separator{Window::line(1, 0), {{0.5, 0.5}}};
  f.residual = 1e-3;
  const auto sj = io::separators_to_json({f, f}, 2);
  CHECK(sj.at("kind") == "sms-separators");
  const auto seps = io::separators_from(sj);
  REQUIRE(seps.size() == 2);
  CHECK(seps[1].taps == f.filter.taps);
  CHECK(code_of([] { io::bank_from(json::parse(R"({"kind":"x"})")); }) == ErrorCode::Parse);
}

TEST_CASE("reports and files") {
  recon::ReconReport r;
  r.engine = "lowrank-S";
  r.iterations = 7;
  r.converged = true;
  r.warnings = {"w"};
  const auto j = io::to_json(r);
  CHECK(j.at("engine") == "lowrank-S");
  CHECK(j.at("iterations") == 7);
  CHECK(j.at("converged") == true);
  CHECK(j.at("warnings").size() == 1);

  const auto path = std::filesystem::temp_directory_path() / "linpred_io_test.json";
  io::write_file(j, path);
  CHECK(io::read_file(path) == j);
  std::filesystem::remove(path);
}
