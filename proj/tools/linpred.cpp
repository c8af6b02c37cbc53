// linpred: command-line front end.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "linpred/error.hpp"
#include "linpred/harness.hpp"
#include "linpred/json_io.hpp"
#include "linpred/lp.hpp"
#include "linpred/lpk.hpp"
#include "linpred/multi.hpp"
#include "linpred/recon.hpp"

using namespace linpred;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void line(const std::string &key, double v) { std::cout << key << ' ' << num(v) << '\n'; }

// Inserts "fov" into phantom objects that do not state one.
void apply_fov(json &doc, std::optional<double> fov) {
  if (!fov || !doc.is_object()) {
    return;
  }
  auto fill = [&](json &p) {
    if (p.is_object() && !p.contains("fov")) {
      const int dims = p.value("dims", 1);
      p["fov"] = dims == 2 ? json::array({*fov, *fov}) : json::array({*fov});
    }
  };
  if (doc.contains("primitives")) {
    fill(doc);
  }
  if (doc.contains("phantom")) {
    fill(doc["phantom"]);
  }
  if (doc.contains("slices") && doc["slices"].is_array()) {
    for (auto &s : doc["slices"]) {
      fill(s);
    }
  }
}

io::Scene load_scene(const std::string &path, std::optional<double> fov) {
  auto doc = io::read_file(path);
  apply_fov(doc, fov);
  return io::scene_from(doc);
}

std::array<double, 2> scene_fov(const io::Scene &s) {
  if (const auto *p = std::get_if<Phantom>(&s)) {
    return p->fovs();
  }
  if (const auto *m = std::get_if<multi::MultiScene>(&s)) {
    return m->base.fovs();
  }
  return std::get<multi::SmsScene>(s).slices.front().fovs();
}

int scene_dims(const io::Scene &s) {
  if (const auto *p = std::get_if<Phantom>(&s)) {
    return p->dims();
  }
  if (const auto *m = std::get_if<multi::MultiScene>(&s)) {
    return m->base.dims();
  }
  return std::get<multi::SmsScene>(s).slices.front().dims();
}

// --grid N (centred, N points per axis) or --half-width H ([-H, H]).
KGrid make_grid(const std::vector<int> &sizes, int half_width, int dims,
                std::array<double, 2> fov) {
  if (half_width > 0) {
    if (dims == 1) {
      return KGrid::line(-half_width, half_width, fov[0]);
    }
    return KGrid::plane({-half_width, half_width, fov[0]}, {-half_width, half_width, fov[1]});
  }
  if (sizes.empty()) {
    throw Usage("--grid or --half-width is required");
  }
  for (int s : sizes) {
    if (s < 1) {
      throw Usage("--grid sizes must be positive");
    }
  }
  if (dims == 1) {
    if (sizes.size() != 1) {
      throw Usage("a 1D scene takes one --grid size");
    }
    return KGrid::centered(sizes[0], fov[0]);
  }
  const int s1 = sizes.size() > 1 ? sizes[1] : sizes[0];
  return KGrid::centered_plane(sizes[0], s1, fov[0], fov[1]);
}

IndexBox centred_calib(const KGrid &g, int w) {
  IndexBox b{{-w / 2, 0}, {-w / 2 + w - 1, 0}};
  if (g.dims() == 2) {
    b.lo[1] = -w / 2;
    b.hi[1] = -w / 2 + w - 1;
  }
  require(g.box().contains(b), "calibration width exceeds the grid");
  return b;
}

IndexBox calib_region(const std::string &mask_path, int calib, const KGrid &g) {
  if (calib > 0) {
    return centred_calib(g, calib);
  }
  if (!mask_path.empty()) {
    const auto m = lpk::read_mask(mask_path);
    if (!m.calib()) {
      fail(ErrorCode::InvalidArgument, "mask has no calibration region; pass --calib");
    }
    return *m.calib();
  }
  throw Usage("fitting needs --mask (with a calibration region) or --calib W");
}

void print_report(const recon::ReconReport &r) {
  std::cout << "engine " << r.engine << '\n';
  std::cout << "iterations " << r.iterations << '\n';
  std::cout << "converged " << (r.converged ? "yes" : "no") << '\n';
  line("residual", r.residual);
  line("data_residual", r.data_residual);
  if (r.rank > 0) {
    std::cout << "rank " << r.rank << '\n';
  }
  if (r.condition_estimate > 0.0) {
    line("condition_estimate", r.condition_estimate);
  }
  for (const auto &w : r.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
}

void print_check(const lp::IdentityCheck &c) {
  line("lhs", c.lhs);
  line("rhs", c.rhs);
  line("tail", c.tail_bound);
  line("gap", c.gap());
  line("relative_gap", c.rhs > 0.0 ? c.gap() / c.rhs : c.gap());
  std::cout << "agrees " << (c.agrees() ? "yes" : "no") << '\n';
}

// ---- shared option blocks ----

struct GridOpts {
  std::vector<int> grid;
  int half_width = 0;
  std::optional<double> fov;

  void add(CLI::App *a) {
    a->add_option("--grid", grid, "grid size N (or N0 N1 in 2D), centred")->expected(1, 2);
    a->add_option("--half-width", half_width, "symmetric grid [-H, H] instead of --grid");
    a->add_option("--fov", fov, "FOV B for phantoms that do not state one");
  }
};

struct FilterOpts {
  int L = 2;
  int P = 2;
  void add(CLI::App *a) {
    a->add_option("--L", L, "filter extent on the negative side")->check(CLI::NonNegativeNumber);
    a->add_option("--P", P, "filter extent on the positive side")->check(CLI::NonNegativeNumber);
  }
};

// ---- subcommands ----

struct PhantomCmd {
  std::string input, out;
  GridOpts g;

  void add(CLI::App &app) {
    auto *c = app.add_subcommand("phantom", "closed-form samples of a phantom or scene");
    c->add_option("input", input, ".phantom.json or .scene.json")->required();
    g.add(c);
    c->add_option("--out", out, "output .lpk")->required();
    c->callback([this] { run(); });
  }
  void run() {
    const auto scene = load_scene(input, g.fov);
    const auto grid = make_grid(g.grid, g.half_width, scene_dims(scene), scene_fov(scene));
    if (const auto *p = std::get_if<Phantom>(&scene)) {
      lpk::write(fourier_samples(*p, grid), fs::path(out));
    } else if (const auto *m = std::get_if<multi::MultiScene>(&scene)) {
      lpk::write(multi::scene_samples(*m, grid), fs::path(out));
    } else {
      lpk::write(multi::sms_slices(std::get<multi::SmsScene>(scene), grid), fs::path(out));
    }
  }
};

struct SampleCmd {
  std::string input, out, mask_out, stencil, kind = "full";
  double accel = 1.0, pf = 9.0 / 16.0, sigma = 0.0;
  int calib = -1;
  std::optional<std::uint64_t> seed;

  void add(CLI::App &app) {
    auto *c = app.add_subcommand("sample", "apply a sampling mask and optional noise");
    c->add_option("input", input, "fully sampled .lpk")->required();
    c->add_option("--mask-kind", kind,
                  "full lowres uniform random random_pf random_nocalib random_pf_nocalib stencil");
    c->add_option("--accel", accel, "acceleration R");
    c->add_option("--calib", calib, "calibration width (default 1/8 of the grid)");
    c->add_option("--pf", pf, "partial Fourier fraction in (0.5, 1]");
    c->add_option("--stencil", stencil, "PBM bitmap for --mask-kind stencil");
    c->add_option("--seed", seed, "seed for random masks and noise");
    c->add_option("--sigma", sigma, "complex noise standard deviation")->check(CLI::NonNegativeNumber);
    c->add_option("--out", out, "output .lpk with the acquired (zero-filled) samples")->required();
    c->add_option("--mask-out", mask_out, "output mask .lpk")->required();
    c->callback([this] { run(); });
  }
  void run() {
    harness::MaskSpec spec;
    spec.kind = harness::parse_mask_kind(kind);
    spec.accel = accel;
    spec.calib = calib;
    spec.pf = pf;
    const bool random = kind.rfind("random", 0) == 0;
    if ((random || sigma > 0.0) && !seed) {
      throw Usage("--seed is required for random masks and noise");
    }
    spec.seed = seed.value_or(0);
    if (spec.kind == harness::MaskKind::Stencil) {
      if (stencil.empty()) {
        throw Usage("--mask-kind stencil needs --stencil");
      }
      int rows = 0, cols = 0;
      spec.stencil = harness::read_pbm(stencil, rows, cols);
    }
    const auto data = lpk::read_multisignal(input);
    const auto mask = harness::gen_mask(spec, data.grid());
    const auto noisy = harness::add_noise(data, sigma, spec.seed);
    const auto zf = zero_fill(noisy, mask);
    if (zf.q_count() == 1) {
      lpk::write(zf.channel(0), fs::path(out));
    } else {
      lpk::write(zf, fs::path(out));
    }
    lpk::write(mask, fs::path(mask_out));
    std::cout << "acquired " << mask.count() << " of " << mask.grid().size() << '\n';
  }
};

struct FitCmd {
  std::string method = "prediction", input, mask, phantom, scene, out;
  int calib = 0, count = 1, target = 0, points = 1024;
  double tau = 0.05, mu = 1.0;
  std::optional<double> ridge;
  GridOpts g;
  FilterOpts f;

  void add(CLI::App &app) {
    auto *c = app.add_subcommand("fit", "estimate filters and write .filters.json");
    c->add_option("--method", method, "prediction nullspace gram smash sms")
        ->check(CLI::IsMember({"prediction", "nullspace", "gram", "smash", "sms"}));
    c->add_option("--in", input, "data .lpk (prediction, nullspace)");
    c->add_option("--mask", mask, "mask .lpk supplying the calibration region");
    c->add_option("--calib", calib, "centred calibration width (overrides the mask)");
    c->add_option("--phantom", phantom, "phantom .json (gram)");
    c->add_option("--scene", scene, "scene .json (smash, sms)");
    f.add(c);
    g.add(c);
    c->add_option("--tau", tau, "relative singular-value threshold (nullspace)");
    c->add_option("--ridge", ridge, "absolute ridge; 0 disables regularisation");
    c->add_option("--count", count, "number of eigensequences (gram)");
    c->add_option("--target", target, "target channel (smash) or slice (sms), 0-based");
    c->add_option("--points", points, "spatial grid points (smash)");
    c->add_option("--mu", mu, "leakage weight (sms)");
    c->add_option("--out", out, "output .filters.json")->required();
    c->callback([this] { run(); });
  }

  void print_bank(const lp::FilterBank &b) {
    std::cout << "filters " << b.size() << '\n';
    for (std::size_t i = 0; i < b.size(); ++i) {
      line("residual[" + std::to_string(i) + "]", b.residuals[i]);
    }
  }

  void run() {
    if (method == "prediction" || method == "nullspace") {
      if (input.empty()) {
        throw Usage("--in is required for --method " + method);
      }
      const auto data = lpk::read_multisignal(input);
      const auto grid = data.grid();
      const auto box = calib_region(mask, calib, grid);
      const auto w = harness::engine_window(grid, f.L, f.P);
      const auto cm = lp::build_calib_matrix(data, box, w);
      const auto bank =
          method == "prediction" ? lp::prediction_bank(cm, ridge) : lp::nullspace_bank(cm, tau);
      if (bank.empty()) {
        fail(ErrorCode::Singular, "no singular value below the threshold; raise --tau");
      }
      io::write_file(io::bank_to_json(bank, method), out);
      print_bank(bank);
    } else if (method == "gram") {
      if (phantom.empty()) {
        throw Usage("--phantom is required for --method gram");
      }
      const auto s = load_scene(phantom, g.fov);
      const auto *p = std::get_if<Phantom>(&s);
      if (!p) {
        fail(ErrorCode::InvalidArgument, "gram fitting takes a bare phantom document");
      }
      const auto bank = lp::smallest_eigensequences(lp::gram_operator(*p, f.L, f.P), count);
      io::write_file(io::bank_to_json(bank, "gram"), out);
      print_bank(bank);
    } else if (method == "smash") {
      if (scene.empty()) {
        throw Usage("--scene is required for --method smash");
      }
      const auto s = load_scene(scene, g.fov);
      const auto *m = std::get_if<multi::MultiScene>(&s);
      if (!m) {
        fail(ErrorCode::InvalidArgument, "smash fitting takes a multi-image scene");
      }
      const auto r = multi::smash_fit(m->modulators, target, f.L, f.P, m->base.fov(), points);
      lp::FilterBank bank;
      bank.filters.push_back(r.filter);
      bank.residuals.push_back(r.residual);
      io::write_file(io::bank_to_json(bank, "smash"), out);
      for (const auto &w : r.warnings) {
        std::cerr << "warning: " << w << '\n';
      }
      print_bank(bank);
    } else {
      if (scene.empty()) {
        throw Usage("--scene is required for --method sms");
      }
      const auto s = load_scene(scene, g.fov);
      const auto *sms = std::get_if<multi::SmsScene>(&s);
      if (!sms) {
        fail(ErrorCode::InvalidArgument, "sms fitting takes an sms scene");
      }
      const auto grid = make_grid(g.grid, g.half_width, scene_dims(s), scene_fov(s));
      if (calib <= 0) {
        throw Usage("--calib is required for --method sms");
      }
      const auto slices = multi::sms_slices(*sms, grid);
      const auto fits =
          multi::sms_fit_separators(slices, sms->coil_count(), centred_calib(grid, calib),
                                    harness::engine_window(grid, f.L, f.P), mu);
      io::write_file(io::separators_to_json(fits, sms->slice_count()), out);
      std::cout << "filters " << fits.size() << '\n';
      for (std::size_t i = 0; i < fits.size(); ++i) {
        line("residual[" + std::to_string(i) + "]", fits[i].residual);
        line("leakage[" + std::to_string(i) + "]", fits[i].leakage);
      }
    }
  }
};

struct ReconCmd {
  std::string input, mask, config, filters, truth, out, report;
  std::string engine, variant, mode;
  std::optional<int> rank, max_iters, L, P;
  std::optional<double> lambda, tol, tau, ridge;
  bool strict = false;

  void add(CLI::App &app) {
    auto *c = app.add_subcommand("recon", "reconstruct undersampled data");
    c->add_option("--in", input, "acquired samples .lpk")->required();
    c->add_option("--mask", mask, "mask .lpk")->required();
    c->add_option("--config", config, "engine config .json");
    c->add_option("--engine", engine,
                  "zerofill grappa spirit pruno lowrank pf pf-virtual annihilation");
    c->add_option("--filters", filters, ".filters.json for --engine annihilation");
    c->add_option("--variant", variant, "structured-matrix variant C or S");
    c->add_option("--rank", rank, "low-rank target (0: automatic)");
    c->add_option("--lambda", lambda, "annihilation weight (soft mode)");
    c->add_option("--mode", mode, "annihilation mode hard or soft");
    c->add_option("--tol", tol, "relative stopping tolerance");
    c->add_option("--max-iters", max_iters, "iteration limit");
    c->add_option("--L", L, "window extent on the negative side");
    c->add_option("--P", P, "window extent on the positive side");
    c->add_option("--tau", tau, "nullspace / automatic-rank threshold");
    c->add_option("--ridge", ridge, "absolute ridge for kernel fits");
    c->add_option("--truth", truth, "reference .lpk; prints the NRMSE");
    c->add_option("--report", report, "write the report as .json");
    c->add_flag("--strict", strict, "exit 3 when the engine did not converge");
    c->add_option("--out", out, "output .lpk")->required();
    c->callback([this] { run(); });
  }

  harness::EngineConfig engine_config() {
    json j = config.empty() ? json::object() : io::read_file(config);
    auto set = [&](const char *k, const auto &v) {
      if (v) {
        j[k] = *v;
      }
    };
    if (!engine.empty()) {
      j["engine"] = engine;
    }
    if (!variant.empty()) {
      j["variant"] = variant;
    }
    if (!mode.empty()) {
      j["mode"] = mode;
    }
    set("rank", rank);
    set("max_iters", max_iters);
    set("L", L);
    set("P", P);
    set("lambda", lambda);
    set("tol", tol);
    set("tau", tau);
    set("ridge", ridge);
    if (j.value("engine", "") == "annihilation") {
      j["engine"] = "spirit"; // validated below; the bank comes from --filters
      auto c = harness::config_from(j);
      c.engine = "annihilation";
      return c;
    }
    return harness::config_from(j);
  }

  void run() {
    const auto cfg = engine_config();
    const auto data = lpk::read_multisignal(input);
    const auto m = lpk::read_mask(mask);
    recon::ReconResult res;
    if (cfg.engine == "annihilation") {
      if (filters.empty()) {
        throw Usage("--engine annihilation needs --filters");
      }
      const auto bank = io::bank_from(io::read_file(filters));
      if (bank.empty()) {
        fail(ErrorCode::InvalidArgument, "filter bank is empty");
      }
      recon::AnnihilationParams ap;
      ap.mode = cfg.mode;
      ap.lambda = cfg.lambda;
      ap.max_iters = cfg.max_iters;
      ap.tol = cfg.tol;
      res = recon::annihilation_recon(zero_fill(data, m), m, bank, ap);
      res.report.engine = "annihilation";
    } else {
      res = harness::reconstruct(data, m, cfg);
    }
    if (res.data.q_count() == 1) {
      lpk::write(res.data.channel(0), fs::path(out));
    } else {
      lpk::write(res.data, fs::path(out));
    }
    print_report(res.report);
    if (!truth.empty()) {
      line("nrmse", harness::nrmse(res.data, lpk::read_multisignal(truth)));
    }
    if (!report.empty()) {
      json r = io::to_json(res.report);
      r["config"] = harness::to_json(cfg);
      io::write_file(r, report);
    }
    if (strict && !res.report.converged) {
      fail(ErrorCode::NotConverged, "engine stopped before reaching the tolerance");
    }
  }
};

struct SmsCmd {
  // superpose
  std::string scene, out, slices_out;
  GridOpts g;
  // separate
  std::string input, filters, mask, intra, truth;
  int max_iters = 500;
  double tol = 1e-9, weight = 1.0;
  bool strict = false;

  void add(CLI::App &app) {
    auto *c = app.add_subcommand("sms", "simultaneous multi-slice superposition and separation");
    c->require_subcommand(1);
    auto *s = c->add_subcommand("superpose", "superposed samples of an sms scene");
    s->add_option("--scene", scene, "sms .scene.json")->required();
    g.add(s);
    s->add_option("--out", out, "superposed .lpk")->required();
    s->add_option("--slices-out", slices_out, "per-slice .lpk (slice-major)");
    s->callback([this] { superpose(); });

    auto *d = c->add_subcommand("separate", "separate superposed data with fitted separators");
    d->add_option("--in", input, "superposed .lpk")->required();
    d->add_option("--filters", filters, "separators .filters.json")->required();
    d->add_option("--mask", mask, "mask .lpk for undersampled data");
    d->add_option("--intra", intra, "intra-slice .filters.json for undersampled data");
    d->add_option("--tol", tol, "relative stopping tolerance (undersampled)");
    d->add_option("--max-iters", max_iters, "iteration limit (undersampled)");
    d->add_option("--weight", weight, "superposition relation weight (undersampled)");
    d->add_option("--truth", truth, "per-slice reference .lpk; prints the NRMSE");
    d->add_flag("--strict", strict, "exit 3 when the solver did not converge");
    d->add_option("--out", out, "per-slice .lpk")->required();
    d->callback([this] { separate(); });
  }

  void superpose() {
    const auto s = load_scene(scene, g.fov);
    const auto *sms = std::get_if<multi::SmsScene>(&s);
    if (!sms) {
      fail(ErrorCode::InvalidArgument, "sms superpose takes an sms scene");
    }
    const auto grid = make_grid(g.grid, g.half_width, scene_dims(s), scene_fov(s));
    const auto slices = multi::sms_slices(*sms, grid);
    const auto sup = multi::superpose(slices, sms->coil_count());
    if (sup.q_count() == 1) {
      lpk::write(sup.channel(0), fs::path(out));
    } else {
      lpk::write(sup, fs::path(out));
    }
    if (!slices_out.empty()) {
      lpk::write(slices, fs::path(slices_out));
    }
  }

  void separate() {
    const auto sup = lpk::read_multisignal(input);
    const auto seps = io::separators_from(io::read_file(filters));
    MultiKSignal est;
    if (mask.empty()) {
      est = multi::sms_separate(sup, seps);
    } else {
      multi::SmsUndersampledParams p;
      p.annihilation.max_iters = max_iters;
      p.annihilation.tol = tol;
      p.superposition_weight = weight;
      if (!intra.empty()) {
        p.intra = io::bank_from(io::read_file(intra));
      }
      const auto r = multi::sms_separate_undersampled(sup, lpk::read_mask(mask), seps, p);
      est = r.slices;
      print_report(r.report);
      if (strict && !r.report.converged) {
        lpk::write(est, fs::path(out));
        fail(ErrorCode::NotConverged, "separation stopped before reaching the tolerance");
      }
    }
    lpk::write(est, fs::path(out));
    if (!truth.empty()) {
      const auto t = lpk::read_multisignal(truth);
      if (mask.empty()) {
        // Fully sampled separation covers the valid region only.
        const auto &g = est.grid();
        std::vector<KSignal> crop;
        for (const auto &c : t.channels()) {
          std::vector<cplx> v;
          for (std::size_t i = 0; i < g.size(); ++i) {
            const auto k = g.coords(i);
            v.push_back(c.at(k[0], k[1]));
          }
          crop.emplace_back(g, std::move(v));
        }
        line("nrmse", harness::nrmse(est, MultiKSignal(std::move(crop))));
      } else {
        line("nrmse", harness::nrmse(est, t));
      }
    }
  }
};

struct VerifyCmd {
  int theorem = 1, index = 0, slice = 0, quad = 4096;
  std::string input, filters;
  std::optional<double> tolerance;
  bool strict = false;
  GridOpts g;

  void add(CLI::App &app) {
    auto *c = app.add_subcommand("verify", "check an annihilation identity: lhs, rhs, tail");
    c->add_option("--theorem", theorem, "1 single image, 2 multi-image, 3 sms")
        ->check(CLI::Range(1, 3));
    c->add_option("input", input, "phantom or scene .json")->required();
    c->add_option("--filters", filters, ".filters.json")->required();
    c->add_option("--index", index, "filter index within the document");
    c->add_option("--slice", slice, "target slice m for theorem 3, 0-based");
    c->add_option("--quad", quad, "quadrature points per unit FOV");
    c->add_option("--tolerance", tolerance, "reject grids whose tail bound exceeds tol * rhs");
    g.add(c);
    c->add_flag("--strict", strict, "exit 3 when lhs and rhs disagree");
    c->callback([this] { run(); });
  }

  void run() {
    const auto s = load_scene(input, g.fov);
    const auto grid = make_grid(g.grid, g.half_width, scene_dims(s), scene_fov(s));
    const auto doc = io::read_file(filters);
    lp::IdentityCheck chk;
    if (doc.value("kind", "") == "sms-separators") {
      if (theorem != 3) {
        fail(ErrorCode::InvalidArgument, "separator documents verify with --theorem 3");
      }
      const auto seps = io::separators_from(doc);
      require(index >= 0 && index < static_cast<int>(seps.size()), "--index out of range");
      require(seps[index].q_count() == 1, "theorem 3 takes single-coil separators");
      chk = multi::verify_theorem3(std::get<multi::SmsScene>(s), slice,
                                   Filter(seps[index].window, seps[index].taps[0]), grid,
                                   quad, tolerance);
    } else {
      const auto bank = io::bank_from(doc);
      require(index >= 0 && index < static_cast<int>(bank.size()), "--index out of range");
      const auto &f = bank.filters[index];
      if (theorem == 1) {
        const auto *p = std::get_if<Phantom>(&s);
        require(p != nullptr, "theorem 1 takes a bare phantom document");
        require(f.q_count() == 1, "theorem 1 takes single-channel filters");
        chk = lp::verify_theorem1(*p, f.channel_filter(0), grid, quad, tolerance);
      } else if (theorem == 2) {
        const auto *m = std::get_if<multi::MultiScene>(&s);
        require(m != nullptr, "theorem 2 takes a multi-image scene");
        chk = multi::verify_theorem2(*m, f, grid, quad, tolerance);
      } else {
        const auto *m = std::get_if<multi::SmsScene>(&s);
        require(m != nullptr, "theorem 3 takes an sms scene");
        require(f.q_count() == 1, "theorem 3 takes single-channel filters");
        chk = multi::verify_theorem3(*m, slice, f.channel_filter(0), grid, quad, tolerance);
      }
    }
    print_check(chk);
    if (strict && !chk.agrees()) {
      fail(ErrorCode::NotConverged, "lhs and rhs disagree beyond tolerance and tail bound");
    }
  }
};

struct BenchCmd {
  std::string config, out;
  bool omit_timing = false;

  void add(CLI::App &app) {
    auto *c = app.add_subcommand("bench", "run an experiment: methods x noise levels x seeds");
    c->add_option("config", config, "experiment .json")->required();
    c->add_option("--out", out, "output directory (report.json, results.csv, images)");
    c->add_flag("--omit-timing", omit_timing, "leave wall-clock times out of the outputs");
    c->callback([this] { run(); });
  }
  void run() {
    harness::ExperimentOptions o;
    o.out_dir = out;
    o.omit_timing = omit_timing;
    o.base_dir = fs::path(config).parent_path();
    const auto r = harness::run_experiment(io::read_file(config), o);
    for (const auto &w : r.at("warnings")) {
      std::cerr << "warning: " << w.get<std::string>() << '\n';
    }
    for (const auto &s : r.at("summary")) {
      std::cout << s.at("mask").get<std::string>() << ' ' << s.at("method").get<std::string>()
                << " sigma " << num(s.at("sigma").get<double>()) << " mean_nrmse "
                << num(s.at("mean_nrmse").get<double>()) << " std_error "
                << num(s.at("std_error").get<double>()) << '\n';
    }
    for (const auto &c : r.at("cases")) {
      if (c.contains("error")) {
        std::cerr << "case " << c.at("mask").get<std::string>() << ' '
                  << c.at("method").get<std::string>() << " failed: "
                  << c.at("error").get<std::string>() << '\n';
      }
    }
  }
};

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"linpred: linear predictability in sampled Fourier data"};
  app.require_subcommand(1);
  PhantomCmd phantom;
  SampleCmd sample;
  FitCmd fit;
  ReconCmd recon_cmd;
  SmsCmd sms;
  VerifyCmd verify;
  BenchCmd bench;
  phantom.add(app);
  sample.add(app);
  fit.add(app);
  recon_cmd.add(app);
  sms.add(app);
  verify.add(app);
  bench.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e, std::cerr, std::cerr);
    return 1;
  } catch (const Usage &e) {
    std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
    return 1;
  } catch (const Error &e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return e.numerical() ? 3 : 2;
  } catch (const nlohmann::json::exception &e) {
    std::cerr << "error (parse): " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error (io): " << e.what() << '\n';
    return 2;
  }
  return 0;
}
