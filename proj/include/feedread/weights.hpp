#pragma once

// Versioned plain-text weight dump. Layout:
//
//   FEEDREAD-WEIGHTS v1
//   input_dim <n>
//   hidden <w1> <w2> ...
//   target_head softmax|linear
//   adversary_head softmax
//   lambda <value>
//   layer <name> <rows> <cols>
//   <row-major weights, one matrix row per line>
//   bias <values>
//   ...
//
// Layers appear in canonical order (shared_0.., target, adversary); values use
// 17 significant digits so a round trip is exact. Adam state is not stored.

#include <filesystem>
#include <iosfwd>

#include "feedread/nn.hpp"

namespace feedread::weights {

inline constexpr const char* kMagic = "FEEDREAD-WEIGHTS v1";

void write(std::ostream& out, const nn::NetworkState& state);
void save(const std::filesystem::path& path, const nn::NetworkState& state);

/// Throws ParseError on a bad header, shape mismatch or truncated file.
nn::NetworkState read(std::istream& in, const std::string& source = "<stream>");
nn::NetworkState load(const std::filesystem::path& path);

}  // namespace feedread::weights
