#include "linpred/lpk.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "linpred/error.hpp"

namespace linpred::lpk {

using nlohmann::json;

namespace {

void put_double(std::string &out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) {
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
  }
}

double get_double(const unsigned char *p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) {
    bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  }
  return std::bit_cast<double>(bits);
}

json grid_header(const KGrid &g) {
  json h;
  h["dims"] = g.dims();
  json nmin = json::array(), nmax = json::array(), fov = json::array();
  for (int a = 0; a < g.dims(); ++a) {
    nmin.push_back(g.axis(a).n_min);
    nmax.push_back(g.axis(a).n_max);
    fov.push_back(g.axis(a).fov);
  }
  h["n_min"] = nmin;
  h["n_max"] = nmax;
  h["fov"] = fov;
  return h;
}

void append_values(std::string &out, std::span<const cplx> v) {
  for (const auto &z : v) {
    put_double(out, z.real());
    put_double(out, z.imag());
  }
}

KGrid parse_grid(const json &h) {
  const int dims = h.at("dims").get<int>();
  if (dims != 1 && dims != 2) {
    fail(ErrorCode::MalformedHeader, "dims must be 1 or 2");
  }
  const auto &nmin = h.at("n_min");
  const auto &nmax = h.at("n_max");
  const auto &fov = h.at("fov");
  if (!nmin.is_array() || !nmax.is_array() || !fov.is_array() ||
      static_cast<int>(nmin.size()) != dims ||
      static_cast<int>(nmax.size()) != dims ||
      static_cast<int>(fov.size()) != dims) {
    fail(ErrorCode::MalformedHeader, "per-axis fields must have dims entries");
  }
  if (dims == 1) {
    return KGrid::line(nmin[0].get<int>(), nmax[0].get<int>(),
                       fov[0].get<double>());
  }
  return KGrid::plane(
      {nmin[0].get<int>(), nmax[0].get<int>(), fov[0].get<double>()},
      {nmin[1].get<int>(), nmax[1].get<int>(), fov[1].get<double>()});
}

std::vector<cplx> take_values(const unsigned char *p, std::size_t n) {
  std::vector<cplx> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = cplx(get_double(p + 16 * i), get_double(p + 16 * i + 8));
  }
  return v;
}

} // namespace

std::string serialize(const Object &obj) {
  json h;
  std::string payload;
  if (const auto *s = std::get_if<KSignal>(&obj)) {
    h = grid_header(s->grid());
    h["kind"] = "signal";
    h["q_count"] = 1;
    h["calib"] = nullptr;
    append_values(payload, s->values());
  } else if (const auto *m = std::get_if<MultiKSignal>(&obj)) {
    h = grid_header(m->grid());
    h["kind"] = "multisignal";
    h["q_count"] = m->q_count();
    h["calib"] = nullptr;
    for (const auto &c : m->channels()) {
      append_values(payload, c.values());
    }
  } else {
    const auto &mask = std::get<SamplingMask>(obj);
    h = grid_header(mask.grid());
    h["kind"] = "mask";
    h["q_count"] = 1;
    if (mask.calib()) {
      const auto &c = *mask.calib();
      json lo = json::array(), hi = json::array();
      for (int a = 0; a < mask.grid().dims(); ++a) {
        lo.push_back(c.lo[a]);
        hi.push_back(c.hi[a]);
      }
      h["calib"] = {{"lo", lo}, {"hi", hi}};
    } else {
      h["calib"] = nullptr;
    }
    for (auto a : mask.acquired()) {
      payload.push_back(static_cast<char>(a));
    }
  }
  h["version"] = kVersion;
  std::string out = h.dump();
  out.push_back('\n');
  out += payload;
  return out;
}

Object deserialize(const std::string &bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) {
    fail(ErrorCode::MalformedHeader, "missing header line terminator");
  }
  json h;
  try {
    h = json::parse(bytes.substr(0, nl));
  } catch (const json::parse_error &e) {
    fail(ErrorCode::MalformedHeader,
         std::string("header is not valid JSON: ") + e.what());
  }
  if (!h.is_object() || !h.contains("version")) {
    fail(ErrorCode::MalformedHeader, "header lacks a version field");
  }
  if (!h["version"].is_number_integer() || h["version"].get<int>() != kVersion) {
    fail(ErrorCode::UnknownVersion,
         "unsupported format version " + h["version"].dump());
  }
  try {
    const auto kind = h.at("kind").get<std::string>();
    const auto grid = parse_grid(h);
    const int q = h.at("q_count").get<int>();
    if (q < 1) {
      fail(ErrorCode::MalformedHeader, "q_count must be positive");
    }
    std::size_t per_index = 0;
    std::size_t channels = 1;
    if (kind == "signal") {
      if (q != 1) {
        fail(ErrorCode::MalformedHeader, "signal must have q_count 1");
      }
      per_index = 16;
    } else if (kind == "multisignal") {
      per_index = 16;
      channels = static_cast<std::size_t>(q);
    } else if (kind == "mask") {
      per_index = 1;
    } else {
      fail(ErrorCode::MalformedHeader, "unknown kind '" + kind + "'");
    }
    const std::size_t expect = grid.size() * per_index * channels;
    const std::size_t have = bytes.size() - nl - 1;
    if (have < expect) {
      fail(ErrorCode::Truncated, "payload truncated: expected " +
                                     std::to_string(expect) + " bytes, found " +
                                     std::to_string(have));
    }
    if (have > expect) {
      fail(ErrorCode::LengthMismatch,
           "payload longer than header declares: expected " +
               std::to_string(expect) + " bytes, found " + std::to_string(have));
    }
    const auto *p = reinterpret_cast<const unsigned char *>(bytes.data()) + nl + 1;
    if (kind == "signal") {
      return KSignal(grid, take_values(p, grid.size()));
    }
    if (kind == "multisignal") {
      std::vector<std::vector<cplx>> ch;
      for (std::size_t c = 0; c < channels; ++c) {
        ch.push_back(take_values(p + c * grid.size() * 16, grid.size()));
      }
      return MultiKSignal(grid, std::move(ch));
    }
    std::vector<std::uint8_t> acq(p, p + grid.size());
    std::optional<IndexBox> calib;
    if (!h.at("calib").is_null()) {
      const auto &c = h["calib"];
      IndexBox b;
      for (int a = 0; a < grid.dims(); ++a) {
        b.lo[a] = c.at("lo").at(a).get<int>();
        b.hi[a] = c.at("hi").at(a).get<int>();
      }
      calib = b;
    }
    return SamplingMask(grid, std::move(acq), calib);
  } catch (const json::exception &e) {
    fail(ErrorCode::MalformedHeader, std::string("bad header field: ") + e.what());
  } catch (const Error &e) {
    if (e.code() == ErrorCode::InvalidArgument) {
      fail(ErrorCode::MalformedHeader, e.what());
    }
    throw;
  }
}

void write(const Object &obj, std::ostream &out) {
  const auto bytes = serialize(obj);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    fail(ErrorCode::Io, "write failed");
  }
}

void write(const Object &obj, const std::filesystem::path &path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  }
  write(obj, f);
}

Object read(std::istream &in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

Object read(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    fail(ErrorCode::Io, "cannot open " + path.string());
  }
  return read(f);
}

KSignal read_signal(const std::filesystem::path &path) {
  auto obj = read(path);
  if (auto *s = std::get_if<KSignal>(&obj)) {
    return std::move(*s);
  }
  if (auto *m = std::get_if<MultiKSignal>(&obj); m && m->q_count() == 1) {
    return m->channel(0);
  }
  fail(ErrorCode::Parse, path.string() + " does not hold a single signal");
}

MultiKSignal read_multisignal(const std::filesystem::path &path) {
  auto obj = read(path);
  if (auto *m = std::get_if<MultiKSignal>(&obj)) {
    return std::move(*m);
  }
  if (auto *s = std::get_if<KSignal>(&obj)) {
    return MultiKSignal::single(std::move(*s));
  }
  fail(ErrorCode::Parse, path.string() + " does not hold a signal");
}

SamplingMask read_mask(const std::filesystem::path &path) {
  auto obj = read(path);
  if (auto *m = std::get_if<SamplingMask>(&obj)) {
    return std::move(*m);
  }
  fail(ErrorCode::Parse, path.string() + " does not hold a mask");
}

} // namespace linpred::lpk
