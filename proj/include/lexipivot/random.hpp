#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lexipivot {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// Named sub-stream of a root seed ("corpus", "init", "shuffle", ...).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) noexcept;
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept;

}  // namespace lexipivot
