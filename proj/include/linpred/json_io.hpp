#pragma once

// JSON documents: phantoms, scenes, filter banks and reconstruction reports.
//
//   phantom  {"dims":1,"fov":[1.0],"primitives":[{"kind":"boxcar",
//             "center":[0],"extent":[0.25],"amplitude":[1,0]}]}
//   scene    {"scenario":"parallel","phantom":{...},"modulators":[...]}
//            {"scenario":"sms","slices":[{...},...],"coils":[[...],...]}
//   modulator {"lo":[-1],"hi":[1],"coeffs":[[re,im],...]}
//
// Scenes may replace explicit modulators with a generator:
//   "sensitivities":{"q_count":8,"bandwidth":2,"seed":1}
//   "phase":{"bandwidth":1,"seed":1,"scale":0.5}   (virtual-conjugate only)

#include <filesystem>
#include <string>
#include <variant>

#include "json.hpp"

#include "linpred/lp.hpp"
#include "linpred/multi.hpp"
#include "linpred/phantom.hpp"
#include "linpred/recon.hpp"

namespace linpred::io {

using json = nlohmann::json;

// Parse failures become ErrorCode::Parse naming the byte offset.
json parse(const std::string &text, const std::string &source = "input");
json read_file(const std::filesystem::path &path);
void write_file(const json &doc, const std::filesystem::path &path);

json to_json(cplx z);
cplx complex_from(const json &j, const std::string &what = "value");

json to_json(const Phantom &p);
Phantom phantom_from(const json &j);

json to_json(const Modulator &m);
Modulator modulator_from(const json &j, int dims);

json to_json(const multi::MultiScene &s);
json to_json(const multi::SmsScene &s);

// A scene document: a bare phantom, a multi-image scene or an SMS scene.
using Scene = std::variant<Phantom, multi::MultiScene, multi::SmsScene>;
Scene scene_from(const json &j);
Scene load_scene(const std::filesystem::path &path);

json to_json(const Window &w);
Window window_from(const json &j);

// {"kind":..., "window":{...}, "q_count":Q, "filters":[{"taps":[[[re,im],...]
// per channel], "anchor":q|null, "residual":r}, ...]}
json bank_to_json(const lp::FilterBank &bank, const std::string &kind);
lp::FilterBank bank_from(const json &j);
json separators_to_json(const std::vector<multi::SeparatorFit> &fits, int slices);
std::vector<multi::Separator> separators_from(const json &j);

json to_json(const recon::ReconReport &r);

} // namespace linpred::io
