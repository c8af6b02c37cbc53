#include "linpred/json_io.hpp"

#include <fstream>
#include <sstream>

#include "linpred/error.hpp"

namespace linpred::io {

namespace {

[[noreturn]] void bad(const std::string &what) { fail(ErrorCode::Parse, what); }

const json &field(const json &j, const char *key, const std::string &ctx) {
  if (!j.is_object() || !j.contains(key)) {
    bad(ctx + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double number(const json &j, const std::string &what) {
  if (!j.is_number()) {
    bad(what + " must be a number");
  }
  return j.get<double>();
}

int integer(const json &j, const std::string &what) {
  if (!j.is_number_integer()) {
    bad(what + " must be an integer");
  }
  return j.get<int>();
}

std::vector<double> numbers(const json &j, std::size_t n, const std::string &what) {
  if (!j.is_array() || j.size() != n) {
    bad(what + " must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto &v : j) {
    out.push_back(number(v, what));
  }
  return out;
}

std::vector<int> integers(const json &j, std::size_t n, const std::string &what) {
  if (!j.is_array() || j.size() != n) {
    bad(what + " must be an array of " + std::to_string(n) + " integers");
  }
  std::vector<int> out;
  for (const auto &v : j) {
    out.push_back(integer(v, what));
  }
  return out;
}

json complex_array(std::span<const cplx> v) {
  json a = json::array();
  for (const auto &z : v) {
    a.push_back(to_json(z));
  }
  return a;
}

std::vector<cplx> complex_vector(const json &j, const std::string &what) {
  if (!j.is_array()) {
    bad(what + " must be an array");
  }
  std::vector<cplx> out;
  for (const auto &v : j) {
    out.push_back(complex_from(v, what));
  }
  return out;
}

const char *kind_name(PrimitiveKind k) {
  switch (k) {
  case PrimitiveKind::Boxcar: return "boxcar";
  case PrimitiveKind::Ellipse: return "ellipse";
  case PrimitiveKind::Point: return "point";
  }
  return "boxcar";
}

// Library validation failures inside a document are data errors too.
template <class F> auto guarded(const std::string &ctx, F &&f) {
  try {
    return f();
  } catch (const Error &e) {
    if (e.code() == ErrorCode::InvalidArgument) {
      bad(ctx + ": " + e.what());
    }
    throw;
  }
}

std::vector<Modulator> modulators_from(const json &j, int dims,
                                       std::array<double, 2> fov) {
  if (j.contains("sensitivities")) {
    const auto &s = j.at("sensitivities");
    const int q = integer(field(s, "q_count", "sensitivities"), "q_count");
    const int bw = integer(field(s, "bandwidth", "sensitivities"), "bandwidth");
    const auto seed = field(s, "seed", "sensitivities").get<std::uint64_t>();
    return make_sensitivities(q, bw, seed, dims, fov);
  }
  const auto &m = field(j, "modulators", "scene");
  if (!m.is_array()) {
    bad("modulators must be an array");
  }
  std::vector<Modulator> out;
  for (const auto &x : m) {
    out.push_back(modulator_from(x, dims));
  }
  return out;
}

} // namespace

json parse(const std::string &text, const std::string &source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    bad(source + ": malformed JSON at byte " + std::to_string(e.byte));
  }
}

json read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::Io, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void write_file(const json &doc, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorCode::Io, "cannot write " + path.string());
  }
  out << doc.dump(2) << '\n';
  if (!out) {
    fail(ErrorCode::Io, "write failed: " + path.string());
  }
}

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from(const json &j, const std::string &what) {
  if (j.is_number()) {
    return {j.get<double>(), 0.0};
  }
  const auto v = numbers(j, 2, what + " (complex as [re, im])");
  return {v[0], v[1]};
}

json to_json(const Phantom &p) {
  json prims = json::array();
  for (const auto &q : p.primitives()) {
    json c = json::array(), e = json::array();
    for (int a = 0; a < p.dims(); ++a) {
      c.push_back(q.center[a]);
      e.push_back(q.extent[a]);
    }
    json o{{"kind", kind_name(q.kind)}, {"center", c}, {"amplitude", to_json(q.amplitude)}};
    if (q.kind != PrimitiveKind::Point) {
      o["extent"] = e;
    }
    prims.push_back(o);
  }
  json fov = json::array();
  for (int a = 0; a < p.dims(); ++a) {
    fov.push_back(p.fov(a));
  }
  return {{"dims", p.dims()}, {"fov", fov}, {"primitives", prims}};
}

Phantom phantom_from(const json &j) {
  const int dims = j.contains("dims") ? integer(j.at("dims"), "dims") : 1;
  if (dims != 1 && dims != 2) {
    bad("dims must be 1 or 2");
  }
  const auto d = static_cast<std::size_t>(dims);
  std::array<double, 2> fov{1.0, 1.0};
  if (j.contains("fov")) {
    const auto f = numbers(j.at("fov"), d, "fov");
    std::copy(f.begin(), f.end(), fov.begin());
  }
  const auto &ps = field(j, "primitives", "phantom");
  if (!ps.is_array()) {
    bad("primitives must be an array");
  }
  std::vector<Primitive> prims;
  for (const auto &x : ps) {
    Primitive p;
    const auto kind = field(x, "kind", "primitive").get<std::string>();
    if (kind == "boxcar") {
      p.kind = PrimitiveKind::Boxcar;
    } else if (kind == "ellipse") {
      p.kind = PrimitiveKind::Ellipse;
    } else if (kind == "point") {
      p.kind = PrimitiveKind::Point;
    } else {
      bad("unknown primitive kind '" + kind + "'");
    }
    const auto c = numbers(field(x, "center", "primitive"), d, "center");
    std::copy(c.begin(), c.end(), p.center.begin());
    if (p.kind != PrimitiveKind::Point) {
      const auto e = numbers(field(x, "extent", "primitive"), d, "extent");
      std::copy(e.begin(), e.end(), p.extent.begin());
    }
    if (x.contains("amplitude")) {
      p.amplitude = complex_from(x.at("amplitude"), "amplitude");
    }
    prims.push_back(p);
  }
  return guarded("phantom", [&] { return Phantom(dims, fov, std::move(prims)); });
}

json to_json(const Modulator &m) {
  json lo = json::array(), hi = json::array();
  for (int a = 0; a < m.dims(); ++a) {
    lo.push_back(m.support().lo[a]);
    hi.push_back(m.support().hi[a]);
  }
  return {{"lo", lo}, {"hi", hi}, {"coeffs", complex_array(m.coeffs())}};
}

Modulator modulator_from(const json &j, int dims) {
  const auto d = static_cast<std::size_t>(dims);
  const auto lo = integers(field(j, "lo", "modulator"), d, "lo");
  const auto hi = integers(field(j, "hi", "modulator"), d, "hi");
  IndexBox box{{lo[0], dims == 2 ? lo[1] : 0}, {hi[0], dims == 2 ? hi[1] : 0}};
  auto coeffs = complex_vector(field(j, "coeffs", "modulator"), "coeffs");
  return guarded("modulator", [&] { return Modulator(dims, box, std::move(coeffs)); });
}

json to_json(const multi::MultiScene &s) {
  json mods = json::array();
  for (const auto &m : s.modulators) {
    mods.push_back(to_json(m));
  }
  return {{"scenario", multi::to_string(s.scenario)},
          {"phantom", to_json(s.base)},
          {"modulators", mods}};
}

json to_json(const multi::SmsScene &s) {
  json slices = json::array();
  for (const auto &p : s.slices) {
    slices.push_back(to_json(p));
  }
  json doc{{"scenario", "sms"}, {"slices", slices}};
  if (!s.coils.empty()) {
    json coils = json::array();
    for (const auto &set : s.coils) {
      json c = json::array();
      for (const auto &m : set) {
        c.push_back(to_json(m));
      }
      coils.push_back(c);
    }
    doc["coils"] = coils;
  }
  return doc;
}

Scene scene_from(const json &j) {
  if (!j.is_object()) {
    bad("scene document must be an object");
  }
  if (!j.contains("scenario")) {
    return phantom_from(j);
  }
  const auto scenario = j.at("scenario").get<std::string>();
  if (scenario == "sms") {
    multi::SmsScene s;
    const auto &sl = field(j, "slices", "sms scene");
    if (!sl.is_array()) {
      bad("slices must be an array");
    }
    for (const auto &p : sl) {
      s.slices.push_back(phantom_from(p));
    }
    if (s.slices.empty()) {
      bad("sms scene needs at least one slice");
    }
    const int dims = s.slices.front().dims();
    if (j.contains("coils")) {
      for (const auto &set : j.at("coils")) {
        std::vector<Modulator> c;
        for (const auto &m : set) {
          c.push_back(modulator_from(m, dims));
        }
        s.coils.push_back(std::move(c));
      }
    } else if (j.contains("sensitivities")) {
      // Each slice sees its own draw (seed + r) of the coil profiles.
      const auto &g = j.at("sensitivities");
      const auto seed = field(g, "seed", "sensitivities").get<std::uint64_t>();
      for (std::size_t r = 0; r < s.slices.size(); ++r) {
        json gr = j;
        gr["sensitivities"]["seed"] = seed + r;
        s.coils.push_back(modulators_from(gr, dims, s.slices.front().fovs()));
      }
    }
    guarded("sms scene", [&] {
      s.validate();
      return 0;
    });
    return s;
  }
  multi::MultiScene s;
  s.scenario = guarded("scene", [&] { return multi::parse_scenario(scenario); });
  s.base = phantom_from(field(j, "phantom", "scene"));
  if (s.scenario == multi::Scenario::VirtualConjugate && j.contains("phase")) {
    const auto &g = j.at("phase");
    const int bw = integer(field(g, "bandwidth", "phase"), "bandwidth");
    const auto seed = field(g, "seed", "phase").get<std::uint64_t>();
    const double scale = g.contains("scale") ? number(g.at("scale"), "scale") : 1.0;
    require(s.base.dims() == 1, "phase generator is 1D only");
    auto pm = make_phase_modulator(bw, seed, scale, s.base.fov());
    s.modulators = {pm.c1, pm.c2};
  } else {
    s.modulators = modulators_from(j, s.base.dims(), s.base.fovs());
  }
  guarded("scene", [&] {
    s.validate();
    return 0;
  });
  return s;
}

Scene load_scene(const std::filesystem::path &path) {
  return scene_from(read_file(path));
}

json to_json(const Window &w) {
  if (w.dims == 1) {
    return {{"dims", 1}, {"L", {w.L[0]}}, {"P", {w.P[0]}}};
  }
  return {{"dims", 2}, {"L", {w.L[0], w.L[1]}}, {"P", {w.P[0], w.P[1]}}};
}

Window window_from(const json &j) {
  const int dims = integer(field(j, "dims", "window"), "dims");
  if (dims != 1 && dims != 2) {
    bad("window dims must be 1 or 2");
  }
  const auto d = static_cast<std::size_t>(dims);
  const auto L = integers(field(j, "L", "window"), d, "L");
  const auto P = integers(field(j, "P", "window"), d, "P");
  for (std::size_t a = 0; a < d; ++a) {
    if (L[a] < 0 || P[a] < 0) {
      bad("window extents must be nonnegative");
    }
  }
  return dims == 1 ? Window::line(L[0], P[0]) : Window::plane(L[0], P[0], L[1], P[1]);
}

json bank_to_json(const lp::FilterBank &bank, const std::string &kind) {
  json fs = json::array();
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto &f = bank.filters[i];
    json taps = json::array();
    for (int q = 0; q < f.q_count(); ++q) {
      taps.push_back(complex_array(f.channel(q)));
    }
    fs.push_back({{"taps", taps},
                  {"anchor", f.anchor() ? json(*f.anchor()) : json(nullptr)},
                  {"residual", bank.residuals[i]}});
  }
  json doc{{"kind", kind}, {"filters", fs}};
  if (!bank.empty()) {
    doc["window"] = to_json(bank.filters.front().window());
    doc["q_count"] = bank.filters.front().q_count();
  }
  return doc;
}

namespace {

std::vector<std::vector<cplx>> taps_from(const json &f, const Window &w, int q) {
  const auto &t = field(f, "taps", "filter");
  if (!t.is_array() || static_cast<int>(t.size()) != q) {
    bad("filter taps must list " + std::to_string(q) + " channels");
  }
  std::vector<std::vector<cplx>> taps;
  for (const auto &c : t) {
    taps.push_back(complex_vector(c, "taps"));
    if (taps.back().size() != w.size()) {
      bad("filter channel has " + std::to_string(taps.back().size()) +
          " taps, window needs " + std::to_string(w.size()));
    }
  }
  return taps;
}

} // namespace

lp::FilterBank bank_from(const json &j) {
  lp::FilterBank bank;
  const auto &fs = field(j, "filters", "filter bank");
  if (!fs.is_array()) {
    bad("filters must be an array");
  }
  if (fs.empty()) {
    return bank;
  }
  const Window w = window_from(field(j, "window", "filter bank"));
  const int q = integer(field(j, "q_count", "filter bank"), "q_count");
  for (const auto &f : fs) {
    std::optional<int> anchor;
    if (f.contains("anchor") && !f.at("anchor").is_null()) {
      anchor = integer(f.at("anchor"), "anchor");
    }
    auto taps = taps_from(f, w, q);
    bank.filters.push_back(
        guarded("filter", [&] { return MultiFilter(w, std::move(taps), anchor); }));
    bank.residuals.push_back(f.contains("residual") ? number(f.at("residual"), "residual")
                                                    : 0.0);
  }
  return bank;
}

json separators_to_json(const std::vector<multi::SeparatorFit> &fits, int slices) {
  json fs = json::array();
  for (const auto &f : fits) {
    json taps = json::array();
    for (const auto &c : f.filter.taps) {
      taps.push_back(complex_array(c));
    }
    fs.push_back({{"taps", taps},
                  {"residual", f.residual},
                  {"leakage", f.leakage},
                  {"ridge_fallback", f.ridge_fallback}});
  }
  json doc{{"kind", "sms-separators"}, {"slices", slices}, {"filters", fs}};
  if (!fits.empty()) {
    doc["window"] = to_json(fits.front().filter.window);
    doc["q_count"] = fits.front().filter.q_count();
  }
  return doc;
}

std::vector<multi::Separator> separators_from(const json &j) {
  const auto &fs = field(j, "filters", "separators");
  if (!fs.is_array() || fs.empty()) {
    bad("separators document lists no filters");
  }
  const Window w = window_from(field(j, "window", "separators"));
  const int q = integer(field(j, "q_count", "separators"), "q_count");
  std::vector<multi::Separator> out;
  for (const auto &f : fs) {
    out.push_back({w, taps_from(f, w, q)});
  }
  return out;
}

json to_json(const recon::ReconReport &r) {
  return {{"engine", r.engine},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"residual", r.residual},
          {"data_residual", r.data_residual},
          {"rank", r.rank},
          {"spectrum_head", r.spectrum_head},
          {"objective", r.objective},
          {"condition_estimate", r.condition_estimate},
          {"uncovered", r.uncovered},
          {"warnings", r.warnings}};
}

} // namespace linpred::io
