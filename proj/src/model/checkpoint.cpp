#include "lexipivot/model/checkpoint.hpp"

#include "json.hpp"
#include "lexipivot/binary_io.hpp"
#include "lexipivot/error.hpp"

namespace lexipivot {

using nlohmann::json;

const char* to_string(ContextMode mode) noexcept {
  return mode == ContextMode::attention ? "attention" : "mean_pool";
}

ContextMode context_mode_from_string(const std::string& name) {
  if (name == "attention") return ContextMode::attention;
  if (name == "mean_pool" || name == "mp") return ContextMode::mean_pool;
  throw ConfigError("unknown context mode \"" + name + "\" (expected attention or mean_pool)");
}

std::string sidecar_path(const std::filesystem::path& path) { return path.string() + ".json"; }

void save_checkpoint(const std::filesystem::path& path, const MultiLingualModel& model,
                     const CheckpointInfo& info) {
  const auto& c = model.config();
  json languages = json::array();
  for (const auto& l : model.languages()) {
    json entry{{"id", l.id}, {"vocab_size", l.vocab_size}};
    if (auto it = info.vocabulary_files.find(l.id); it != info.vocabulary_files.end()) entry["vocabulary"] = it->second;
    languages.push_back(entry);
  }
  const json sidecar{
      {"format", "lexipivot-checkpoint"},
      {"version", 1},
      {"dims",
       {{"input_dim", c.dims.input_dim},
        {"embed_dim", c.dims.embed_dim},
        {"hidden_dim", c.dims.hidden_dim},
        {"attention_dim", c.dims.attention_dim},
        {"regions", c.dims.regions}}},
      {"context", to_string(c.context)},
      {"freeze_encoder", c.freeze_encoder},
      {"max_len", c.max_len},
      {"languages", languages},
      {"seed", info.seed},
  };
  save_params(model.params(), path);
  write_file_atomic(sidecar_path(path), sidecar.dump(2) + "\n");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto side = sidecar_path(path);
  json j;
  try {
    j = json::parse(read_file(side));
  } catch (const json::exception& e) {
    throw FormatError(side + ": " + e.what());
  }
  try {
    ModelConfig config;
    const auto& d = j.at("dims");
    config.dims.input_dim = d.at("input_dim").get<std::size_t>();
    config.dims.embed_dim = d.at("embed_dim").get<std::size_t>();
    config.dims.hidden_dim = d.at("hidden_dim").get<std::size_t>();
    config.dims.attention_dim = d.at("attention_dim").get<std::size_t>();
    config.dims.regions = d.at("regions").get<std::size_t>();
    config.context = context_mode_from_string(j.at("context").get<std::string>());
    config.freeze_encoder = j.at("freeze_encoder").get<bool>();
    config.max_len = j.at("max_len").get<std::size_t>();
    std::vector<LanguageSpec> languages;
    CheckpointInfo info;
    info.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& l : j.at("languages")) {
      languages.push_back(LanguageSpec{l.at("id").get<std::string>(), l.at("vocab_size").get<std::size_t>()});
      if (l.contains("vocabulary")) info.vocabulary_files[languages.back().id] = l["vocabulary"].get<std::string>();
    }
    auto model = MultiLingualModel::from_params(config, std::move(languages), load_params(path));
    return LoadedCheckpoint{std::move(model), std::move(info)};
  } catch (const json::exception& e) {
    throw FormatError(side + ": " + e.what());
  }
}

}  // namespace lexipivot
