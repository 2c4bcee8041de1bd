#include "lexipivot/corpus/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "lexipivot/error.hpp"
#include "lexipivot/random.hpp"

namespace lexipivot {

// ---------------------------------------------------------------------------
// Lexicon

void GroundTruthLexicon::add(const std::string& source, const std::string& target,
                             const std::string& tag) {
  entries[source].insert(target);
  if (!tag.empty()) pos[source] = tag;
}

std::size_t GroundTruthLexicon::pair_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, targets] : entries) n += targets.size();
  return n;
}

std::string GroundTruthLexicon::pos_of(const std::string& source) const {
  auto it = pos.find(source);
  return it == pos.end() ? std::string("unk") : it->second;
}

GroundTruthLexicon GroundTruthLexicon::restricted_to(const Vocabulary& source,
                                                     const Vocabulary& target) const {
  GroundTruthLexicon out;
  for (const auto& [src, targets] : entries) {
    if (!source.find(src)) continue;
    for (const auto& tgt : targets) {
      if (target.find(tgt)) out.entries[src].insert(tgt);
    }
    if (out.entries.count(src) && pos.count(src)) out.pos[src] = pos.at(src);
  }
  return out;
}

GroundTruthLexicon GroundTruthLexicon::with_pos(const std::set<std::string>& tags) const {
  GroundTruthLexicon out;
  for (const auto& [src, targets] : entries) {
    if (!tags.count(pos_of(src))) continue;
    out.entries[src] = targets;
    if (pos.count(src)) out.pos[src] = pos.at(src);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

void CorpusConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("corpus: " + m); };
  if (concepts < 1) fail("concepts must be at least 1");
  if (images_per_language < 1) fail("images_per_language must be at least 1");
  if (attributes < 1) fail("attributes must be at least 1");
  if (verbs < 1) fail("verbs must be at least 1");
  if (grid_side < 1) fail("grid_side must be at least 1");
  if (feature_dim < 8) fail("feature_dim must be at least 8");
  if (captions_per_image < 1) fail("captions_per_image must be at least 1");
  if (context_size < 1 || context_size > concepts) fail("context_size must be in [1, concepts]");
  if (context_size > grid_side * grid_side) fail("context_size exceeds the number of regions");
  if (!(verb_affinity >= 0.0 && verb_affinity <= 1.0)) fail("verb_affinity must be in [0, 1]");
  if (!(single_object_rate >= 0.0 && single_object_rate <= 1.0)) fail("single_object_rate must be in [0, 1]");
  if (noise_sigma < 0.0) fail("noise_sigma must be non-negative");
  if (source_language.empty() || target_language.empty() || source_language == target_language) {
    fail("language ids must be distinct and non-empty");
  }
  // Longest caption: sentinels + four words per clause + conjunctions.
  const std::size_t longest = 2 + 4 * context_size + (context_size - 1);
  if (longest > max_len) {
    fail("context_size " + std::to_string(context_size) + " yields captions of " +
         std::to_string(longest) + " tokens, above max_len " + std::to_string(max_len));
  }
}

// ---------------------------------------------------------------------------
// Languages

std::vector<std::string> SyntheticLanguageSpec::function_words() const {
  std::vector<std::string> out{determiner, conjunction};
  out.insert(out.end(), verbs.begin(), verbs.end());
  return out;
}

std::vector<std::string> SyntheticLanguageSpec::all_words() const {
  std::vector<std::string> out = concept_words;
  out.insert(out.end(), attribute_words.begin(), attribute_words.end());
  const auto fw = function_words();
  out.insert(out.end(), fw.begin(), fw.end());
  return out;
}

std::vector<std::string> SyntheticLanguageSpec::realize(
    const Scene& scene, const std::vector<std::size_t>& order,
    const std::vector<std::size_t>& verb_choice) const {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Slot& slot = scene.slots().at(order[i]);
    if (i) words.push_back(conjunction);
    words.push_back(determiner);
    const std::string& noun = concept_words.at(slot.concept_id);
    if (placement == AttributePlacement::after_noun) words.push_back(noun);
    for (auto a : slot.attribute_ids) words.push_back(attribute_words.at(a));
    if (placement == AttributePlacement::before_noun) words.push_back(noun);
    words.push_back(verbs.at(verb_choice.at(i)));
  }
  return words;
}

namespace {

class WordForge {
 public:
  explicit WordForge(std::uint64_t seed) : rng_(seed) {}

  std::string make(std::size_t syllables, bool closed) {
    static constexpr std::string_view kOnsets = "bdfgklmnprstvz";
    static constexpr std::string_view kVowels = "aeiou";
    static constexpr std::string_view kCodas = "lnrsx";
    for (;;) {
      std::string w;
      for (std::size_t s = 0; s < syllables; ++s) {
        w += kOnsets[pick(kOnsets.size())];
        w += kVowels[pick(kVowels.size())];
      }
      if (closed) w += kCodas[pick(kCodas.size())];
      if (used_.insert(w).second) return w;
    }
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  Rng rng_;
  std::set<std::string> used_;
};

SyntheticLanguageSpec make_language(const CorpusConfig& cfg, const std::string& id,
                                    AttributePlacement placement, WordForge& forge) {
  SyntheticLanguageSpec spec;
  spec.language_id = id;
  spec.placement = placement;
  for (std::size_t c = 0; c < cfg.concepts; ++c) spec.concept_words.push_back(forge.make(2, true));
  for (std::size_t a = 0; a < cfg.attributes; ++a) spec.attribute_words.push_back(forge.make(2, false));
  spec.determiner = forge.make(1, false);
  spec.conjunction = forge.make(1, true);
  for (std::size_t v = 0; v < cfg.verbs; ++v) spec.verbs.push_back(forge.make(3, false));
  for (const auto& w : spec.concept_words) spec.pos_of_word[w] = "NOUN";
  for (const auto& w : spec.attribute_words) spec.pos_of_word[w] = "ADJ";
  spec.pos_of_word[spec.determiner] = "DET";
  spec.pos_of_word[spec.conjunction] = "CONJ";
  for (const auto& w : spec.verbs) spec.pos_of_word[w] = "VERB";
  return spec;
}

Vector unit_vector(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n(rng);
  return v / v.norm();
}

Scene make_scene(const CorpusConfig& cfg, std::uint64_t scene_id, Rng& rng) {
  const std::size_t groups = (cfg.concepts + cfg.context_size - 1) / cfg.context_size;
  const std::size_t g = std::uniform_int_distribution<std::size_t>(0, groups - 1)(rng);
  std::size_t first = g * cfg.context_size;
  std::size_t last = std::min(cfg.concepts, first + cfg.context_size);
  if (last - first > 1 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.single_object_rate) {
    first = std::uniform_int_distribution<std::size_t>(first, last - 1)(rng);
    last = first + 1;
  }

  std::vector<std::size_t> regions(cfg.grid_side * cfg.grid_side);
  std::iota(regions.begin(), regions.end(), std::size_t{0});
  std::shuffle(regions.begin(), regions.end(), rng);
  std::uniform_int_distribution<std::uint32_t> attr(0, static_cast<std::uint32_t>(cfg.attributes - 1));

  std::vector<Slot> slots;
  for (std::size_t c = first; c < last; ++c) {
    slots.push_back(Slot{regions[c - first], static_cast<std::uint32_t>(c), {attr(rng)}});
  }
  return Scene(cfg.grid_side, std::move(slots), scene_id);
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

FeatureRenderer::FeatureRenderer(std::size_t concepts, std::size_t attributes,
                                 std::size_t feature_dim, double attribute_scale,
                                 std::uint64_t seed)
    : feature_dim_(feature_dim) {
  if (feature_dim < 8) throw ConfigError("feature_dim must be at least 8");
  Rng rng(seed);
  for (std::size_t c = 0; c < concepts; ++c) concepts_.push_back(unit_vector(feature_dim, rng));
  for (std::size_t a = 0; a < attributes; ++a) {
    attributes_.push_back(attribute_scale * unit_vector(feature_dim, rng));
  }
  background_ = unit_vector(feature_dim, rng);
}

SpatialImage FeatureRenderer::render(const Scene& scene, double noise_sigma,
                                     std::uint64_t noise_seed) const {
  const std::size_t K = scene.region_count();
  std::vector<Vector> grid(K, background_);
  for (const auto& slot : scene.slots()) {
    Vector v = concepts_.at(slot.concept_id);
    for (auto a : slot.attribute_ids) v += attributes_.at(a);
    grid[slot.region] = v;
  }
  Rng rng(noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  SpatialImage image{scene.scene_id(), K, feature_dim_, std::vector<float>(K * feature_dim_)};
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t d = 0; d < feature_dim_; ++d) {
      const double eps = noise_sigma > 0.0 ? noise_sigma * noise(rng) : 0.0;
      image.data[k * feature_dim_ + d] = static_cast<float>(grid[k][static_cast<Eigen::Index>(d)] + eps);
    }
  }
  return image;
}

// ---------------------------------------------------------------------------
// Corpus

const LanguageCorpus& SyntheticCorpus::language(const std::string& id) const {
  for (const auto& l : languages) {
    if (l.spec.language_id == id) return l;
  }
  throw LookupError("corpus has no language \"" + id + "\"");
}

const Scene& SyntheticCorpus::scene(std::uint64_t scene_id) const {
  for (const auto& l : languages) {
    for (const auto& s : l.scenes) {
      if (s.scene_id() == scene_id) return s;
    }
  }
  throw LookupError("corpus has no scene " + std::to_string(scene_id));
}

SyntheticCorpus generate_corpus(const CorpusConfig& config, std::uint64_t seed) {
  config.validate();
  SyntheticCorpus corpus;
  corpus.config = config;
  corpus.seed = seed;

  WordForge forge(derive_seed(seed, "words"));
  corpus.languages.push_back(
      {make_language(config, config.source_language, AttributePlacement::before_noun, forge), {}, {}});
  corpus.languages.push_back(
      {make_language(config, config.target_language, AttributePlacement::after_noun, forge), {}, {}});

  const auto& src = corpus.languages[0].spec;
  const auto& tgt = corpus.languages[1].spec;
  for (std::size_t c = 0; c < config.concepts; ++c) {
    corpus.lexicon.add(src.concept_words[c], tgt.concept_words[c], "NOUN");
  }
  for (std::size_t a = 0; a < config.attributes; ++a) {
    corpus.lexicon.add(src.attribute_words[a], tgt.attribute_words[a], "ADJ");
  }
  corpus.lexicon.add(src.determiner, tgt.determiner, "DET");
  corpus.lexicon.add(src.conjunction, tgt.conjunction, "CONJ");
  for (std::size_t v = 0; v < config.verbs; ++v) corpus.lexicon.add(src.verbs[v], tgt.verbs[v], "VERB");

  // Scenes: disjoint id ranges per language, or one shared set.
  Rng scene_rng(derive_seed(seed, "scenes"));
  const std::size_t n_src = config.images_for(0);
  const std::size_t n_tgt = config.images_for(1);
  for (std::size_t i = 0; i < n_src; ++i) {
    corpus.languages[0].scenes.push_back(make_scene(config, i, scene_rng));
  }
  if (config.disjoint_images) {
    for (std::size_t i = 0; i < n_tgt; ++i) {
      corpus.languages[1].scenes.push_back(make_scene(config, n_src + i, scene_rng));
    }
  } else {
    auto& shared = corpus.languages[0].scenes;
    for (std::size_t i = n_src; i < n_tgt; ++i) shared.push_back(make_scene(config, i, scene_rng));
    corpus.languages[1].scenes.assign(shared.begin(), shared.begin() + static_cast<std::ptrdiff_t>(n_tgt));
    shared.resize(n_src, shared.front());
  }

  const FeatureRenderer renderer(config.concepts, config.attributes, config.feature_dim,
                                 config.attribute_scale, derive_seed(seed, "prototypes"));
  const std::uint64_t noise_root = derive_seed(seed, "noise");
  for (const auto& lang : corpus.languages) {
    for (const auto& scene : lang.scenes) {
      if (corpus.features.count(scene.scene_id())) continue;
      corpus.features.emplace(scene.scene_id(),
                              renderer.render(scene, config.noise_sigma,
                                              derive_seed(noise_root, scene.scene_id())));
    }
  }

  for (std::size_t li = 0; li < corpus.languages.size(); ++li) {
    auto& lang = corpus.languages[li];
    Rng rng(derive_seed(derive_seed(seed, "captions"), li));
    std::uniform_int_distribution<std::size_t> verb(0, config.verbs - 1);
    for (const auto& scene : lang.scenes) {
      for (std::size_t c = 0; c < config.captions_per_image; ++c) {
        std::vector<std::size_t> order(scene.slots().size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::size_t> verbs(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
          const bool preferred = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.verb_affinity;
          verbs[i] = preferred ? scene.slots()[order[i]].concept_id % config.verbs : verb(rng);
        }
        lang.captions.push_back(
            Caption{scene.scene_id(), lang.spec.language_id, lang.spec.realize(scene, order, verbs)});
      }
    }
  }
  return corpus;
}

}  // namespace lexipivot
