#include "lexipivot/error.hpp"
#include "lexipivot/random.hpp"

namespace lexipivot {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::shape: return "shape";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::bounds: return "bounds";
    case ErrorKind::state: return "state";
    case ErrorKind::determinism: return "determinism";
    case ErrorKind::config: return "config";
    case ErrorKind::format: return "format";
    case ErrorKind::input: return "input";
    case ErrorKind::lookup: return "lookup";
    case ErrorKind::no_visual: return "no-visual";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) noexcept {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) noexcept {
  return splitmix64(root ^ fnv1a64(stream));
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(root) + index);
}

}  // namespace lexipivot
