#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lexipivot::cli {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Record of one command run, written atomically when the command finishes.
class RunManifest {
 public:
  RunManifest(std::string command, std::string config_hash, std::uint64_t seed, std::filesystem::path out_dir);

  void add_input(const std::filesystem::path& path);
  /// Paths are recorded relative to the output directory.
  void add_output(const std::filesystem::path& path);
  void add_timing(const std::string& stage, double seconds);
  void set_note(const std::string& key, const std::string& value);

  std::string to_json() const;
  void write() const;

 private:
  std::string command_;
  std::string config_hash_;
  std::uint64_t seed_;
  std::filesystem::path out_dir_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, double>> timings_;
  std::map<std::string, std::string> notes_;
};

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

class StageTimer {
 public:
  StageTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace lexipivot::cli
