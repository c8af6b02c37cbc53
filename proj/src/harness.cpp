#include "linpred/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "linpred/error.hpp"
#include "linpred/json_io.hpp"
#include "linpred/lp.hpp"
#include "linpred/multi.hpp"

namespace linpred::harness {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

// Uniform draw in [0, n) by rejection, so masks do not depend on the
// standard library's distribution implementations.
std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t n) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

int floor_mod(int a, int m) { return ((a % m) + m) % m; }

IndexBox centred_box(const KGrid &g, int w0, int w1) {
  IndexBox b{{-w0 / 2, 0}, {-w0 / 2 + w0 - 1, 0}};
  if (g.dims() == 2) {
    b.lo[1] = -w1 / 2;
    b.hi[1] = -w1 / 2 + w1 - 1;
  }
  return b;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

} // namespace

const char *to_string(MaskKind k) {
  switch (k) {
  case MaskKind::Full: return "full";
  case MaskKind::Lowres: return "lowres";
  case MaskKind::Uniform: return "uniform";
  case MaskKind::Random: return "random";
  case MaskKind::RandomPf: return "random_pf";
  case MaskKind::RandomNocalib: return "random_nocalib";
  case MaskKind::RandomPfNocalib: return "random_pf_nocalib";
  case MaskKind::Stencil: return "stencil";
  }
  return "full";
}

MaskKind parse_mask_kind(const std::string &s) {
  for (auto k : {MaskKind::Full, MaskKind::Lowres, MaskKind::Uniform, MaskKind::Random,
                 MaskKind::RandomPf, MaskKind::RandomNocalib, MaskKind::RandomPfNocalib,
                 MaskKind::Stencil}) {
    if (s == to_string(k)) {
      return k;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown mask kind '" + s + "'");
}

SamplingMask gen_mask(const MaskSpec &spec, const KGrid &grid) {
  require(spec.accel >= 1.0, "acceleration must be at least 1");
  require(spec.pf > 0.5 && spec.pf <= 1.0, "partial Fourier fraction must be in (0.5, 1]");
  const int dims = grid.dims();
  const int n0 = grid.axis(0).size();
  const int n1 = grid.axis(1).size();
  const std::size_t size = grid.size();
  std::vector<std::uint8_t> acq(size, 0);

  if (spec.kind == MaskKind::Full) {
    return SamplingMask(grid, std::vector<std::uint8_t>(size, 1), grid.box());
  }
  if (spec.kind == MaskKind::Stencil) {
    require(spec.stencil.size() == size, "stencil bitmap has " +
                                             std::to_string(spec.stencil.size()) +
                                             " entries, grid has " + std::to_string(size));
    for (std::size_t i = 0; i < size; ++i) {
      acq[i] = spec.stencil[i] ? 1 : 0;
    }
    std::optional<IndexBox> cal;
    if (spec.calib > 0) {
      cal = centred_box(grid, spec.calib, spec.calib);
      require(grid.box().contains(*cal), "calibration region wider than the grid");
      for (int a = cal->lo[0]; a <= cal->hi[0]; ++a) {
        for (int b = cal->lo[1]; b <= cal->hi[1]; ++b) {
          require(acq[grid.index(a, b)] != 0,
                  "stencil does not fully sample the calibration region");
        }
      }
    }
    return SamplingMask(grid, std::move(acq), cal);
  }
  if (spec.kind == MaskKind::Lowres) {
    const double f = dims == 2 ? std::sqrt(spec.accel) : spec.accel;
    const int w0 = static_cast<int>(std::ceil(n0 / f - 1e-9));
    const int w1 = dims == 2 ? static_cast<int>(std::ceil(n1 / f - 1e-9)) : 1;
    const auto box = centred_box(grid, w0, w1);
    for (std::size_t i = 0; i < size; ++i) {
      const auto c = grid.coords(i);
      acq[i] = box.contains(c[0], c[1]) ? 1 : 0;
    }
    return SamplingMask(grid, std::move(acq), box);
  }

  const bool nocalib =
      spec.kind == MaskKind::RandomNocalib || spec.kind == MaskKind::RandomPfNocalib;
  const bool pf = spec.kind == MaskKind::RandomPf || spec.kind == MaskKind::RandomPfNocalib;
  int w = nocalib ? 0 : spec.calib;
  if (w < 0) {
    w = std::max(1, std::min(n0, dims == 2 ? n1 : n0) / 8);
  }
  std::optional<IndexBox> cal;
  if (w > 0) {
    require(w <= n0 && (dims == 1 || w <= n1),
            "calibration width " + std::to_string(w) + " exceeds the grid");
    cal = centred_box(grid, w, w);
  }
  // Partial Fourier keeps the high end of axis 0.
  int keep_lo = grid.axis(0).n_min;
  if (pf) {
    const int kept = static_cast<int>(std::ceil(spec.pf * n0 - 1e-9));
    keep_lo = grid.axis(0).n_max - kept + 1;
    require(!cal || cal->lo[0] >= keep_lo,
            "partial Fourier boundary excludes part of the calibration region");
  }
  auto kept = [&](int a) { return a >= keep_lo; };
  std::size_t region = 0;
  for (std::size_t i = 0; i < size; ++i) {
    region += kept(grid.coords(i)[0]) ? 1 : 0;
  }
  if (cal) {
    for (std::size_t i = 0; i < size; ++i) {
      const auto c = grid.coords(i);
      if (cal->contains(c[0], c[1])) {
        acq[i] = 1;
      }
    }
  }

  if (spec.kind == MaskKind::Uniform) {
    const int r = static_cast<int>(std::lround(spec.accel));
    require(std::abs(spec.accel - r) < 1e-12, "uniform masks need an integer acceleration");
    for (std::size_t i = 0; i < size; ++i) {
      if (floor_mod(grid.coords(i)[0], r) == 0) {
        acq[i] = 1;
      }
    }
    return SamplingMask(grid, std::move(acq), cal);
  }

  const auto target = std::max<std::size_t>(
      static_cast<std::size_t>(std::ceil(static_cast<double>(region) / spec.accel - 1e-9)),
      cal ? cal->size() : 0);
  std::vector<std::size_t> cand;
  std::size_t have = 0;
  for (std::size_t i = 0; i < size; ++i) {
    if (acq[i]) {
      ++have;
    } else if (kept(grid.coords(i)[0])) {
      cand.push_back(i);
    }
  }
  std::mt19937_64 rng(spec.seed);
  const std::size_t draw = target > have ? std::min(target - have, cand.size()) : 0;
  for (std::size_t j = 0; j < draw; ++j) {
    const auto pick = j + bounded(rng, cand.size() - j);
    std::swap(cand[j], cand[pick]);
    acq[cand[j]] = 1;
  }
  return SamplingMask(grid, std::move(acq), cal);
}

std::vector<std::uint8_t> read_pbm(const std::filesystem::path &path, int &rows,
                                   int &cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::Io, "cannot open " + path.string());
  }
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) {
          break;
        }
      } else {
        t += c;
      }
    }
    return t;
  };
  const auto magic = token();
  if (magic != "P1" && magic != "P4") {
    fail(ErrorCode::Parse, path.string() + ": not a PBM bitmap");
  }
  try {
    cols = std::stoi(token());
    rows = std::stoi(token());
  } catch (const std::exception &) {
    fail(ErrorCode::Parse, path.string() + ": bad PBM dimensions");
  }
  if (rows <= 0 || cols <= 0) {
    fail(ErrorCode::Parse, path.string() + ": bad PBM dimensions");
  }
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(rows) * cols);
  if (magic == "P1") {
    for (auto &b : bits) {
      char c;
      do {
        if (!in.get(c)) {
          fail(ErrorCode::Truncated, path.string() + ": PBM data ends early");
        }
        if (c == '#') {
          std::string skip;
          std::getline(in, skip);
          c = ' ';
        }
      } while (c != '0' && c != '1');
      b = c == '1' ? 1 : 0;
    }
  } else {
    const int stride = (cols + 7) / 8;
    std::vector<char> row(stride);
    for (int r = 0; r < rows; ++r) {
      if (!in.read(row.data(), stride)) {
        fail(ErrorCode::Truncated, path.string() + ": PBM data ends early");
      }
      for (int c = 0; c < cols; ++c) {
        bits[static_cast<std::size_t>(r) * cols + c] = (row[c / 8] >> (7 - c % 8)) & 1;
      }
    }
  }
  return bits;
}

MultiKSignal add_noise(const MultiKSignal &data, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0, "noise level must be nonnegative");
  if (sigma == 0.0) {
    return data;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sigma / std::sqrt(2.0));
  std::vector<KSignal> out;
  for (const auto &c : data.channels()) {
    auto v = c.vec();
    for (auto &z : v) {
      const double re = nd(rng);
      const double im = nd(rng);
      z += cplx(re, im);
    }
    out.emplace_back(c.grid(), std::move(v));
  }
  return MultiKSignal(std::move(out));
}

double nrmse(const KSignal &estimate, const KSignal &truth) {
  if (!(estimate.grid() == truth.grid())) {
    fail(ErrorCode::GridMismatch, "estimate and truth grids differ");
  }
  double e = 0.0, t = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    e += std::norm(estimate.vec()[i] - truth.vec()[i]);
    t += std::norm(truth.vec()[i]);
  }
  if (t == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return std::sqrt(e / t);
}

double nrmse(const MultiKSignal &estimate, const MultiKSignal &truth) {
  if (estimate.q_count() != truth.q_count()) {
    fail(ErrorCode::LengthMismatch, "estimate and truth channel counts differ");
  }
  double e = 0.0, t = 0.0;
  for (int q = 0; q < truth.q_count(); ++q) {
    const auto &a = estimate.channel(q);
    const auto &b = truth.channel(q);
    if (!(a.grid() == b.grid())) {
      fail(ErrorCode::GridMismatch, "estimate and truth grids differ");
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      e += std::norm(a.vec()[i] - b.vec()[i]);
      t += std::norm(b.vec()[i]);
    }
  }
  if (t == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return std::sqrt(e / t);
}

Metrics score(const MultiKSignal &estimate, const MultiKSignal &truth) {
  Metrics m;
  m.nrmse = nrmse(estimate, truth);
  m.truth_zero = std::isinf(m.nrmse);
  for (int q = 0; q < truth.q_count(); ++q) {
    m.channel_nrmse.push_back(nrmse(estimate.channel(q), truth.channel(q)));
  }
  return m;
}

// ---- engines ----

const std::vector<std::string> &engine_names() {
  static const std::vector<std::string> names{"zerofill", "grappa",    "spirit", "pruno",
                                              "lowrank",  "pf", "pf-virtual"};
  return names;
}

EngineConfig config_from(const json &j, EngineConfig c) {
  if (!j.is_object()) {
    fail(ErrorCode::Parse, "engine config must be an object");
  }
  try {
    for (const auto &[key, v] : j.items()) {
      if (key == "engine") {
        c.engine = v.get<std::string>();
      } else if (key == "variant") {
        c.variant = recon::parse_variant(v.get<std::string>());
      } else if (key == "rank") {
        c.rank = v.get<int>();
      } else if (key == "lambda") {
        c.lambda = v.get<double>();
      } else if (key == "tol") {
        c.tol = v.get<double>();
      } else if (key == "max_iters") {
        c.max_iters = v.get<int>();
      } else if (key == "L") {
        c.L = v.get<int>();
      } else if (key == "P") {
        c.P = v.get<int>();
      } else if (key == "tau") {
        c.tau = v.get<double>();
      } else if (key == "mode") {
        const auto m = v.get<std::string>();
        if (m != "hard" && m != "soft") {
          fail(ErrorCode::Parse, "mode must be 'hard' or 'soft'");
        }
        c.mode = m == "hard" ? recon::AnnihilationMode::Hard : recon::AnnihilationMode::Soft;
      } else if (key == "ridge") {
        c.ridge = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      } else if (key != "name") {
        fail(ErrorCode::Parse, "unknown engine config field '" + key + "'");
      }
    }
  } catch (const json::exception &e) {
    fail(ErrorCode::Parse, std::string("engine config: ") + e.what());
  } catch (const Error &e) {
    if (e.code() == ErrorCode::InvalidArgument) {
      fail(ErrorCode::Parse, std::string("engine config: ") + e.what());
    }
    throw;
  }
  if (std::find(engine_names().begin(), engine_names().end(), c.engine) ==
      engine_names().end()) {
    fail(ErrorCode::Parse, "unknown engine '" + c.engine + "'");
  }
  return c;
}

json to_json(const EngineConfig &c) {
  json j{{"engine", c.engine},
         {"variant", recon::to_string(c.variant)},
         {"rank", c.rank},
         {"lambda", c.lambda},
         {"tol", c.tol},
         {"max_iters", c.max_iters},
         {"L", c.L},
         {"P", c.P},
         {"tau", c.tau},
         {"mode", c.mode == recon::AnnihilationMode::Hard ? "hard" : "soft"}};
  j["ridge"] = c.ridge ? json(*c.ridge) : json(nullptr);
  return j;
}

Window engine_window(const KGrid &grid, int L, int P) {
  require(L >= 0 && P >= 0, "L and P must be nonnegative");
  return grid.dims() == 1 ? Window::line(L, P) : Window::plane(L, P, L, P);
}

recon::ReconResult reconstruct(const MultiKSignal &measured, const SamplingMask &mask,
                               const EngineConfig &c) {
  if (!(measured.grid() == mask.grid())) {
    fail(ErrorCode::GridMismatch, "data and mask grids differ");
  }
  const auto zf = zero_fill(measured, mask);
  const Window w = engine_window(measured.grid(), c.L, c.P);
  auto calib = [&]() {
    if (!mask.calib()) {
      fail(ErrorCode::InvalidArgument,
           "engine '" + c.engine + "' needs a calibration region, but the mask has none");
    }
    return *mask.calib();
  };
  recon::AnnihilationParams ap;
  ap.mode = c.mode;
  ap.lambda = c.lambda;
  ap.max_iters = c.max_iters;
  ap.tol = c.tol;

  if (c.engine == "zerofill") {
    recon::ReconResult r{zf, {}};
    r.report.engine = "zerofill";
    r.report.converged = true;
    return r;
  }
  if (c.engine == "grappa") {
    // Samples whose neighbourhood holds no acquired sample are filled in
    // later passes, treating earlier interpolations as acquired.
    const auto cal = calib();
    recon::ReconResult r{zf, {}};
    r.report.engine = "grappa";
    SamplingMask cur = mask;
    for (int pass = 1; pass <= 8; ++pass) {
      const auto k = lp::fit_grappa(zf, cal, cur, w, c.ridge);
      auto part = lp::interpolate_available(r.data, cur, k);
      r.data = std::move(part.data);
      r.report.iterations = pass;
      r.report.uncovered = part.uncovered;
      const bool stalled = part.filled.count() == cur.count();
      cur = std::move(part.filled);
      if (part.uncovered == 0 || stalled) {
        break;
      }
    }
    r.report.converged = r.report.uncovered == 0;
    if (r.report.iterations > 1) {
      r.report.warnings.push_back(
          "some samples had no acquired neighbours and were filled from interpolated ones");
    }
    if (r.report.uncovered > 0) {
      r.report.warnings.push_back(std::to_string(r.report.uncovered) +
                                  " samples could not be interpolated and stay zero");
    }
    return r;
  }
  if (c.engine == "spirit" || c.engine == "pruno") {
    const auto cm = lp::build_calib_matrix(zf, calib(), w);
    const auto bank =
        c.engine == "spirit" ? lp::prediction_bank(cm, c.ridge) : lp::nullspace_bank(cm, c.tau);
    if (bank.empty()) {
      fail(ErrorCode::Singular,
           "no calibration nullspace below the threshold; raise tau or the window");
    }
    auto r = recon::annihilation_recon(zf, mask, bank, ap);
    r.report.engine = c.engine;
    return r;
  }
  if (c.engine == "lowrank") {
    recon::LowrankParams lp{w, c.variant, c.rank, c.tau, c.max_iters, c.tol, {}};
    return recon::lowrank_complete(zf, mask, lp);
  }
  if (c.engine == "pf" || c.engine == "pf-virtual") {
    recon::PfParams pp;
    pp.lowrank = {w, recon::Variant::S, c.rank, c.tau, c.max_iters, c.tol, {}};
    pp.annihilation = ap;
    pp.null_tau = c.tau;
    pp.method = c.engine == "pf" ? recon::PfMethod::LowrankS
                                 : recon::PfMethod::AnnihilationVirtual;
    return recon::pf_recon(zf, mask, pp);
  }
  fail(ErrorCode::InvalidArgument, "unknown engine '" + c.engine + "'");
}

// ---- images ----

std::vector<double> rss_image(const MultiKSignal &data) {
  const auto &g = data.grid();
  require(g.dims() == 2, "images are rendered for 2D data only");
  const int n0 = g.axis(0).size(), n1 = g.axis(1).size();
  const int m0 = g.axis(0).n_min, m1 = g.axis(1).n_min;
  // Pixel j sits at x = (j + n_min) B / N, so the image is centred.
  auto table = [](int n, int m) {
    std::vector<cplx> t(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double ph = 2.0 * kPi * static_cast<double>((j + m) * (k + m)) / n;
        t[static_cast<std::size_t>(j) * n + k] = std::polar(1.0, ph);
      }
    }
    return t;
  };
  const auto t0 = table(n0, m0), t1 = table(n1, m1);
  std::vector<double> img(static_cast<std::size_t>(n0) * n1, 0.0);
  for (const auto &ch : data.channels()) {
    std::vector<cplx> tmp(img.size());
#pragma omp parallel for schedule(static)
    for (int a = 0; a < n0; ++a) {
      for (int j = 0; j < n1; ++j) {
        cplx s = 0.0;
        for (int b = 0; b < n1; ++b) {
          s += ch.vec()[static_cast<std::size_t>(a) * n1 + b] * t1[static_cast<std::size_t>(j) * n1 + b];
        }
        tmp[static_cast<std::size_t>(a) * n1 + j] = s;
      }
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n0; ++i) {
      for (int j = 0; j < n1; ++j) {
        cplx s = 0.0;
        for (int a = 0; a < n0; ++a) {
          s += tmp[static_cast<std::size_t>(a) * n1 + j] * t0[static_cast<std::size_t>(i) * n0 + a];
        }
        img[static_cast<std::size_t>(i) * n1 + j] += std::norm(s);
      }
    }
  }
  for (auto &v : img) {
    v = std::sqrt(v);
  }
  return img;
}

void write_pgm(const std::vector<double> &image, int rows, int cols,
               const std::filesystem::path &path) {
  require(image.size() == static_cast<std::size_t>(rows) * cols, "image size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorCode::Io, "cannot write " + path.string());
  }
  out << "P5\n" << cols << ' ' << rows << "\n65535\n";
  const double mx = image.empty() ? 0.0 : *std::max_element(image.begin(), image.end());
  for (double v : image) {
    const auto u = static_cast<std::uint16_t>(
        mx > 0.0 ? std::lround(std::clamp(v / mx, 0.0, 1.0) * 65535.0) : 0);
    const char b[2] = {static_cast<char>(u >> 8), static_cast<char>(u & 0xff)};
    out.write(b, 2);
  }
  if (!out) {
    fail(ErrorCode::Io, "write failed: " + path.string());
  }
}

// ---- experiments ----

namespace {

struct Case {
  std::string mask, method;
  double sigma;
  std::uint64_t seed;
};

MultiKSignal truth_samples(const io::Scene &scene, const KGrid &grid) {
  if (const auto *p = std::get_if<Phantom>(&scene)) {
    return MultiKSignal::single(fourier_samples(*p, grid));
  }
  if (const auto *m = std::get_if<multi::MultiScene>(&scene)) {
    return multi::scene_samples(*m, grid);
  }
  return multi::sms_superpose(std::get<multi::SmsScene>(scene), grid);
}

std::array<double, 2> scene_fov(const io::Scene &scene) {
  if (const auto *p = std::get_if<Phantom>(&scene)) {
    return p->fovs();
  }
  if (const auto *m = std::get_if<multi::MultiScene>(&scene)) {
    return m->base.fovs();
  }
  return std::get<multi::SmsScene>(scene).slices.front().fovs();
}

int scene_dims(const io::Scene &scene) {
  return std::visit(
      [](const auto &s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Phantom>) {
          return s.dims();
        } else if constexpr (std::is_same_v<T, multi::MultiScene>) {
          return s.base.dims();
        } else {
          return s.slices.front().dims();
        }
      },
      scene);
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

MaskSpec mask_from(const json &j, const std::filesystem::path &base) {
  MaskSpec s;
  for (const auto &[key, v] : j.items()) {
    if (key == "kind") {
      s.kind = parse_mask_kind(v.get<std::string>());
    } else if (key == "accel") {
      s.accel = v.get<double>();
    } else if (key == "calib") {
      s.calib = v.get<int>();
    } else if (key == "pf") {
      s.pf = v.get<double>();
    } else if (key == "seed") {
      s.seed = v.get<std::uint64_t>();
    } else if (key == "stencil") {
      int rows = 0, cols = 0;
      s.stencil = read_pbm(resolve(base, v.get<std::string>()), rows, cols);
    } else if (key != "name") {
      fail(ErrorCode::Parse, "unknown mask field '" + key + "'");
    }
  }
  return s;
}

std::string sigma_tag(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

} // namespace

json run_experiment(const json &config, const ExperimentOptions &options) {
  if (!config.is_object()) {
    fail(ErrorCode::Parse, "experiment config must be an object");
  }
  json report;
  json warnings = json::array();
  io::Scene scene;
  KGrid grid;
  std::vector<std::pair<std::string, MaskSpec>> masks;
  std::vector<std::pair<std::string, EngineConfig>> methods;
  std::vector<double> sigmas{0.0};
  std::vector<std::uint64_t> seeds{0};
  std::string name = "experiment";
  bool images = false;
  try {
    name = config.value("name", name);
    const auto &sc = config.at("scene");
    scene = sc.is_string() ? io::load_scene(resolve(options.base_dir, sc.get<std::string>()))
                           : io::scene_from(sc);
    const auto fov = scene_fov(scene);
    const auto gs = config.at("grid").get<std::vector<int>>();
    require(static_cast<int>(gs.size()) == scene_dims(scene),
            "grid must list one size per scene dimension");
    grid = gs.size() == 1 ? KGrid::centered(gs[0], fov[0])
                          : KGrid::centered_plane(gs[0], gs[1], fov[0], fov[1]);
    for (const auto &m : config.at("masks")) {
      masks.emplace_back(m.value("name", std::string(to_string(mask_from(m, options.base_dir).kind))),
                         mask_from(m, options.base_dir));
    }
    for (const auto &m : config.value("methods", json::array())) {
      const auto c = config_from(m);
      methods.emplace_back(m.value("name", c.engine), c);
    }
    if (config.contains("sigmas")) {
      sigmas = config.at("sigmas").get<std::vector<double>>();
    }
    if (config.contains("seeds")) {
      seeds = config.at("seeds").get<std::vector<std::uint64_t>>();
    }
    images = config.value("images", false);
  } catch (const json::exception &e) {
    fail(ErrorCode::Parse, std::string("experiment config: ") + e.what());
  }
  if (methods.empty()) {
    warnings.push_back("no methods listed; the result table is empty");
  }

  const auto truth = truth_samples(scene, grid);
  std::vector<Case> cases;
  for (const auto &m : masks) {
    for (const auto &e : methods) {
      for (double s : sigmas) {
        for (auto seed : seeds) {
          cases.push_back({m.first, e.first, s, seed});
        }
      }
    }
  }
  std::sort(cases.begin(), cases.end(), [](const Case &a, const Case &b) {
    return std::tie(a.mask, a.method, a.sigma, a.seed) <
           std::tie(b.mask, b.method, b.sigma, b.seed);
  });
  std::map<std::string, SamplingMask> mask_cache;
  std::map<std::string, std::string> mask_errors;
  for (const auto &[mname, spec] : masks) {
    try {
      mask_cache.emplace(mname, gen_mask(spec, grid));
    } catch (const Error &e) {
      mask_errors[mname] = e.what();
    }
  }
  std::map<std::string, EngineConfig> method_map(methods.begin(), methods.end());

  const bool write = !options.out_dir.empty();
  if (write) {
    std::filesystem::create_directories(options.out_dir);
  }
  const bool render = write && images && grid.dims() == 2;
  const int rows = grid.axis(0).size(), cols = grid.axis(1).size();
  if (render) {
    write_pgm(rss_image(truth), rows, cols, options.out_dir / "truth.pgm");
  }

  json rows_json = json::array();
  std::map<std::tuple<std::string, std::string, double>, std::vector<double>> groups;
  std::set<std::tuple<std::string, std::string, double>> rendered;
  for (const auto &c : cases) {
    json row{{"scene", name}, {"mask", c.mask}, {"method", c.method},
             {"sigma", c.sigma}, {"seed", c.seed}};
    try {
      if (mask_errors.count(c.mask)) {
        fail(ErrorCode::InvalidArgument, mask_errors.at(c.mask));
      }
      const auto &mask = mask_cache.at(c.mask);
      const auto noisy = add_noise(truth, c.sigma, c.seed);
      const auto t0 = std::chrono::steady_clock::now();
      const auto res = reconstruct(noisy, mask, method_map.at(c.method));
      const auto t1 = std::chrono::steady_clock::now();
      const auto m = score(res.data, truth);
      row["nrmse"] = m.nrmse;
      row["channel_nrmse"] = m.channel_nrmse;
      row["iterations"] = res.report.iterations;
      row["report"] = io::to_json(res.report);
      if (!options.omit_timing) {
        row["wall_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
      }
      groups[{c.mask, c.method, c.sigma}].push_back(m.nrmse);
      const auto key = std::make_tuple(c.mask, c.method, c.sigma);
      if (render && !rendered.count(key)) {
        rendered.insert(key);
        write_pgm(rss_image(res.data), rows, cols,
                  options.out_dir /
                      (c.mask + "_" + c.method + "_s" + sigma_tag(c.sigma) + ".pgm"));
      }
    } catch (const Error &e) {
      row["error"] = std::string(to_string(e.code())) + ": " + e.what();
    }
    rows_json.push_back(row);
  }

  json summary = json::array();
  for (const auto &[key, v] : groups) {
    double mean = 0.0;
    for (double x : v) {
      mean += x;
    }
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) {
      var += (x - mean) * (x - mean);
    }
    const double se =
        v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1) / v.size()) : 0.0;
    summary.push_back({{"mask", std::get<0>(key)},
                       {"method", std::get<1>(key)},
                       {"sigma", std::get<2>(key)},
                       {"cases", v.size()},
                       {"mean_nrmse", mean},
                       {"std_error", se}});
  }
  report = {{"scene", name}, {"cases", rows_json}, {"summary", summary},
            {"warnings", warnings}};
  if (write) {
    io::write_file(report, options.out_dir / "report.json");
    std::ofstream csv(options.out_dir / "results.csv", std::ios::binary);
    csv << results_csv(report);
    if (!csv) {
      fail(ErrorCode::Io, "cannot write results.csv");
    }
  }
  return report;
}

std::string results_csv(const json &report) {
  std::ostringstream out;
  out << "scene,mask,method,sigma,seed,nrmse,iterations,wall_ms\n";
  for (const auto &r : report.at("cases")) {
    out << r.at("scene").get<std::string>() << ',' << r.at("mask").get<std::string>() << ','
        << r.at("method").get<std::string>() << ',' << fmt(r.at("sigma").get<double>()) << ','
        << r.at("seed").get<std::uint64_t>() << ',';
    if (r.contains("nrmse") && r.at("nrmse").is_number()) {
      out << fmt(r.at("nrmse").get<double>());
    } else {
      out << "nan";
    }
    out << ',';
    if (r.contains("iterations")) {
      out << r.at("iterations").get<int>();
    }
    out << ',';
    if (r.contains("wall_ms")) {
      out << fmt(r.at("wall_ms").get<double>());
    }
    out << '\n';
  }
  return out.str();
}

} // namespace linpred::harness
