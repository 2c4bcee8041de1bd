#include "lexipivot/cli/manifest.hpp"

#include <cstdio>

#include "json.hpp"
#include "lexipivot/binary_io.hpp"
#include "lexipivot/random.hpp"

namespace lexipivot::cli {

RunManifest::RunManifest(std::string command, std::string config_hash, std::uint64_t seed,
                         std::filesystem::path out_dir)
    : command_(std::move(command)), config_hash_(std::move(config_hash)), seed_(seed), out_dir_(std::move(out_dir)) {}

void RunManifest::add_input(const std::filesystem::path& path) { inputs_[path.string()] = file_digest(path); }

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs_.push_back(std::filesystem::relative(path, out_dir_).generic_string());
}

void RunManifest::add_timing(const std::string& stage, double seconds) { timings_.emplace_back(stage, seconds); }

void RunManifest::set_note(const std::string& key, const std::string& value) { notes_[key] = value; }

std::string RunManifest::to_json() const {
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  for (const auto& [stage, s] : timings_) timings[stage] = s;
  nlohmann::ordered_json j{
      {"artifact", "lexipivot"}, {"version", kArtifactVersion}, {"command", command_},
      {"config_hash", config_hash_}, {"seed", seed_}, {"inputs", inputs_},
      {"outputs", outputs_},   {"timings_seconds", timings},
  };
  if (!notes_.empty()) j["notes"] = notes_;
  return j.dump(2) + "\n";
}

void RunManifest::write() const { write_file_atomic(out_dir_ / "manifest.json", to_json()); }

std::string file_digest(const std::filesystem::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(read_file(path))));
  return buf;
}

}  // namespace lexipivot::cli
