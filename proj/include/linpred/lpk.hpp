#pragma once

// .lpk container: one UTF-8 JSON header line followed by a raw payload.
//
//   {"calib":null,"dims":1,"fov":[1.0],"kind":"signal","n_max":[7],
//    "n_min":[-8],"q_count":1,"version":1}\n<payload>
//
// Signal payloads are little-endian IEEE-754 doubles, interleaved re/im, in
// ascending index order, channel-major for multisignals. Masks store one
// byte (0/1) per index.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "linpred/grid.hpp"

namespace linpred::lpk {

inline constexpr int kVersion = 1;

using Object = std::variant<KSignal, MultiKSignal, SamplingMask>;

void write(const Object &obj, std::ostream &out);
void write(const Object &obj, const std::filesystem::path &path);
Object read(std::istream &in);
Object read(const std::filesystem::path &path);

std::string serialize(const Object &obj);
Object deserialize(const std::string &bytes);

// Convenience accessors that reject the wrong kind with ErrorCode::Parse.
// A single-channel signal is accepted where a multisignal is requested.
KSignal read_signal(const std::filesystem::path &path);
MultiKSignal read_multisignal(const std::filesystem::path &path);
SamplingMask read_mask(const std::filesystem::path &path);

} // namespace linpred::lpk
