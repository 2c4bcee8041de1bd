#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lexipivot/error.hpp"

namespace lexipivot {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

/// Append-only little-endian byte buffer.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    bytes_.append(p, sizeof(T));
  }

  void put_bytes(std::string_view raw) { bytes_.append(raw); }

  /// u32 length prefix followed by the raw bytes.
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes_.append(s);
  }

  const std::string& bytes() const noexcept { return bytes_; }

 private:
  std::string bytes_;
};

/// Bounds-checked reader; errors carry the byte offset.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get(const char* what) {
    require(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  std::string_view get_bytes(std::size_t n, const char* what) {
    require(n, what);
    auto view = bytes_.substr(offset_, n);
    offset_ += n;
    return view;
  }

  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    return std::string(get_bytes(n, what));
  }

  void expect_magic(std::string_view magic) {
    const auto got = get_bytes(magic.size(), "magic");
    if (got != magic) {
      fail("bad magic, expected \"" + std::string(magic) + "\"");
    }
  }

  std::size_t offset() const noexcept { return offset_; }
  std::size_t remaining() const noexcept { return bytes_.size() - offset_; }
  bool at_end() const noexcept { return offset_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& message) const {
    throw FormatError(source_ + ": " + message + " at offset " + std::to_string(offset_));
  }

 private:
  void require(std::size_t n, const char* what) const {
    if (bytes_.size() - offset_ < n) {
      fail(std::string("truncated while reading ") + what);
    }
  }

  std::string_view bytes_;
  std::string source_;
  std::size_t offset_ = 0;
};

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace lexipivot
