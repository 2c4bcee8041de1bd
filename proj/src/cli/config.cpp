#include "lexipivot/cli/config.hpp"

#include <cstdio>

#include "lexipivot/binary_io.hpp"
#include "lexipivot/error.hpp"
#include "lexipivot/model/checkpoint.hpp"
#include "lexipivot/random.hpp"

namespace lexipivot::cli {

using nlohmann::json;

namespace {

// Reads the keys of one object, rejecting any that no reader claimed.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(label() + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key \"" + qualified(key) + "\" has the wrong type");
    }
  }

  void read_optional(const char* key, std::optional<std::size_t>& out) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    std::size_t v = 0;
    read(key, v);
    out = v;
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) return std::nullopt;
    return Section(*it, qualified(key));
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : doc_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key \"" + qualified(key) + "\"");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : "config section \"" + path_ + "\""; }

  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig c;
  Section root(doc, "");
  root.read("seed", c.seed);
  if (auto s = root.child("corpus")) {
    auto& k = c.corpus;
    s->read("concepts", k.concepts);
    s->read("attributes", k.attributes);
    s->read("verbs", k.verbs);
    s->read("grid_side", k.grid_side);
    s->read("feature_dim", k.feature_dim);
    s->read("images_per_language", k.images_per_language);
    s->read("target_images", k.target_images);
    s->read("captions_per_image", k.captions_per_image);
    s->read("context_size", k.context_size);
    s->read("single_object_rate", k.single_object_rate);
    s->read("verb_affinity", k.verb_affinity);
    s->read("disjoint_images", k.disjoint_images);
    s->read("noise_sigma", k.noise_sigma);
    s->read("attribute_scale", k.attribute_scale);
    s->read("max_len", k.max_len);
    s->read("source_language", k.source_language);
    s->read("target_language", k.target_language);
    s->read("min_count", c.min_count);
    s->finish();
  }
  if (auto s = root.child("model")) {
    auto& d = c.model.dims;
    s->read("embed_dim", d.embed_dim);
    s->read("hidden_dim", d.hidden_dim);
    s->read("attention_dim", d.attention_dim);
    std::string context = to_string(c.model.context);
    s->read("context", context);
    c.model.context = context_mode_from_string(context);
    s->read("freeze_encoder", c.model.freeze_encoder);
    s->finish();
  }
  if (auto s = root.child("training")) {
    auto& t = c.training;
    s->read("batch_size", t.batch_size);
    s->read("learning_rate", t.learning_rate);
    s->read("max_epochs", t.max_epochs);
    s->read("patience", t.patience);
    s->read("clip_norm", t.clip_norm);
    s->read("val_fraction", c.val_fraction);
    s->finish();
  }
  if (auto s = root.child("extraction")) {
    std::string method = to_string(c.extraction.method);
    s->read("method", method);
    c.extraction.method = localization_method_from_string(method);
    s->read_optional("cap", c.extraction.cap);
    s->finish();
  }
  if (auto s = root.child("induction")) {
    auto& i = c.induction;
    std::vector<std::string> methods;
    for (auto m : i.methods) methods.push_back(to_string(m));
    s->read("methods", methods);
    i.methods.clear();
    for (const auto& m : methods) i.methods.push_back(ranking_method_from_string(m));
    if (i.methods.empty()) throw ConfigError("induction.methods must not be empty");
    s->read("lambda", i.lambda);
    s->read("top_n", i.top_n);
    s->read("normalize_occurrences", i.normalize_occurrences);
    s->read("pos_groups", i.pos_groups);
    s->finish();
  }
  root.finish();

  c.model.max_len = c.corpus.max_len;
  c.corpus.validate();
  c.training.validate();
  if (c.val_fraction < 0.0 || c.val_fraction >= 1.0) throw ConfigError("training.val_fraction must be in [0, 1)");
  if (c.induction.lambda < 0.0 || c.induction.lambda > 1.0) throw ConfigError("induction.lambda must be in [0, 1]");
  if (c.extraction.cap && *c.extraction.cap == 0) throw ConfigError("extraction.cap must be positive or null");
  if (c.corpus.source_language == c.corpus.target_language) {
    throw ConfigError("corpus.source_language and corpus.target_language must differ");
  }
  // Region layout follows the corpus; validate the rest with it filled in.
  ModelConfig probe = c.model;
  probe.dims.input_dim = c.corpus.feature_dim;
  probe.dims.regions = c.corpus.grid_side * c.corpus.grid_side;
  probe.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  using oj = nlohmann::ordered_json;
  const auto& k = c.corpus;
  std::vector<std::string> methods;
  for (auto m : c.induction.methods) methods.push_back(to_string(m));
  return oj{
      {"seed", c.seed},
      {"corpus",
       {{"concepts", k.concepts},
        {"attributes", k.attributes},
        {"verbs", k.verbs},
        {"grid_side", k.grid_side},
        {"feature_dim", k.feature_dim},
        {"images_per_language", k.images_per_language},
        {"target_images", k.target_images},
        {"captions_per_image", k.captions_per_image},
        {"context_size", k.context_size},
        {"single_object_rate", k.single_object_rate},
        {"verb_affinity", k.verb_affinity},
        {"disjoint_images", k.disjoint_images},
        {"noise_sigma", k.noise_sigma},
        {"attribute_scale", k.attribute_scale},
        {"max_len", k.max_len},
        {"source_language", k.source_language},
        {"target_language", k.target_language},
        {"min_count", c.min_count}}},
      {"model",
       {{"embed_dim", c.model.dims.embed_dim},
        {"hidden_dim", c.model.dims.hidden_dim},
        {"attention_dim", c.model.dims.attention_dim},
        {"context", to_string(c.model.context)},
        {"freeze_encoder", c.model.freeze_encoder}}},
      {"training",
       {{"batch_size", c.training.batch_size},
        {"learning_rate", c.training.learning_rate},
        {"max_epochs", c.training.max_epochs},
        {"patience", c.training.patience},
        {"clip_norm", c.training.clip_norm},
        {"val_fraction", c.val_fraction}}},
      {"extraction",
       {{"method", to_string(c.extraction.method)}, {"cap", c.extraction.cap ? oj(*c.extraction.cap) : oj()}}},
      {"induction",
       {{"methods", methods},
        {"lambda", c.induction.lambda},
        {"top_n", c.induction.top_n},
        {"normalize_occurrences", c.induction.normalize_occurrences},
        {"pos_groups", c.induction.pos_groups}}},
  };
}

std::string config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(config).dump())));
  return buf;
}

std::uint64_t stage_seed(const RunConfig& config, const char* stream) { return derive_seed(config.seed, stream); }

}  // namespace lexipivot::cli
