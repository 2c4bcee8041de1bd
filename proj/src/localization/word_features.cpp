#include "lexipivot/localization/word_features.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "lexipivot/binary_io.hpp"
#include "lexipivot/error.hpp"
#include "lexipivot/random.hpp"

namespace lexipivot {

namespace {

constexpr std::string_view kMagic = "LXWF";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kAggregatedFlag = 1;

std::vector<float> to_floats(const Vector& v) {
  std::vector<float> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  return out;
}

struct CaptionResult {
  std::vector<std::pair<std::string, std::vector<float>>> occurrences;
  std::vector<float> global;
  std::size_t seen = 0;
};

CaptionResult process(const MultiLingualModel& model, const Vocabulary& vocab, const TrainingExample& ex,
                      LocalizationMethod method) {
  if (!ex.image) throw InputError("caption without an image");
  CaptionResult r;
  const auto regions = model.encode(*ex.image);
  r.global = global_image_feature(regions);
  const auto occurrences = method == LocalizationMethod::probe
                               ? localize(model, ex.language, regions, ex.image->image_id, ex.tokens)
                               : localize_by_attention(model, ex.language, regions, ex.image->image_id, ex.tokens);
  for (const auto& occ : occurrences) {
    if (Vocabulary::is_reserved(occ.word_index)) continue;
    ++r.seen;
    r.occurrences.emplace_back(vocab.word(occ.word_index), to_floats(occ.feature));
  }
  return r;
}

}  // namespace

std::size_t WordFeatureSet::occurrence_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, v] : words) n += v.size();
  return n;
}

std::vector<float> global_image_feature(const EncodedImage& regions) { return to_floats(regions.mean()); }

CollectedFeatures collect_word_features(const MultiLingualModel& model, const Vocabulary& vocab,
                                        std::span<const TrainingExample> captions,
                                        const CollectionOptions& options) {
  if (options.cap && *options.cap == 0) throw ConfigError("feature cap must be positive");
  if (!model.has_language(vocab.language())) {
    throw LookupError("language \"" + vocab.language() + "\" is not registered with the model");
  }
  if (model.vocab_size(vocab.language()) != vocab.size()) {
    throw ConfigError("vocabulary of \"" + vocab.language() + "\" has " + std::to_string(vocab.size()) +
                      " entries, model expects " + std::to_string(model.vocab_size(vocab.language())));
  }
  for (const auto& ex : captions) {
    if (ex.language != vocab.language()) {
      throw InputError("caption in \"" + ex.language + "\" passed with the \"" + vocab.language() + "\" vocabulary");
    }
  }

  std::vector<CaptionResult> results(captions.size());
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, captions.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < captions.size(); ++i) results[i] = process(model, vocab, captions[i], options.method);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < captions.size();) {
          try {
            results[i] = process(model, vocab, captions[i], options.method);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = captions.size();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  CollectedFeatures out;
  out.localized.language = out.global.language = vocab.language();
  out.localized.dim = model.config().dims.embed_dim;
  out.global.dim = model.config().dims.embed_dim;
  for (const auto& r : results) {
    out.occurrences_seen += r.seen;
    for (const auto& [word, feature] : r.occurrences) {
      out.localized.words[word].push_back(feature);
      out.global.words[word].push_back(r.global);
    }
  }

  if (options.cap) {
    const std::uint64_t root = derive_seed(options.seed, "feature-cap");
    for (auto& [word, local] : out.localized.words) {
      if (local.size() <= *options.cap) continue;
      std::vector<std::size_t> idx(local.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      Rng rng(derive_seed(root, word));
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(*options.cap);
      std::sort(idx.begin(), idx.end());
      auto& global = out.global.words[word];
      std::vector<std::vector<float>> kept_local, kept_global;
      for (auto i : idx) {
        kept_local.push_back(std::move(local[i]));
        kept_global.push_back(std::move(global[i]));
      }
      local = std::move(kept_local);
      global = std::move(kept_global);
    }
  }
  return out;
}

std::string serialize_word_features(const WordFeatureSet& set) {
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put(kVersion);
  w.put_string(set.language);
  w.put(set.aggregated ? kAggregatedFlag : std::uint32_t{0});
  w.put(static_cast<std::uint32_t>(set.dim));
  w.put(static_cast<std::uint32_t>(set.words.size()));
  for (const auto& [word, vectors] : set.words) {
    if (set.aggregated && vectors.size() != 1) {
      throw StateError("aggregated table holds " + std::to_string(vectors.size()) + " vectors for \"" + word + "\"");
    }
    w.put_string(word);
    w.put(static_cast<std::uint32_t>(vectors.size()));
    for (const auto& v : vectors) {
      if (v.size() != set.dim) {
        throw ShapeError("feature of \"" + word + "\" has " + std::to_string(v.size()) + " values, table dim is " +
                         std::to_string(set.dim));
      }
      w.put_bytes(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float)));
    }
  }
  return w.bytes();
}

WordFeatureSet deserialize_word_features(std::string_view bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(kMagic);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
  WordFeatureSet set;
  set.language = r.get_string("language");
  const auto flags = r.get<std::uint32_t>("flags");
  if (flags & ~kAggregatedFlag) r.fail("unknown flags " + std::to_string(flags));
  set.aggregated = flags & kAggregatedFlag;
  set.dim = r.get<std::uint32_t>("dim");
  const auto count = r.get<std::uint32_t>("word count");
  for (std::uint32_t i = 0; i < count; ++i) {
    auto word = r.get_string("word");
    const auto n = r.get<std::uint32_t>("occurrence count");
    if (set.aggregated && n != 1) r.fail("aggregated entry \"" + word + "\" holds " + std::to_string(n) + " vectors");
    if (set.words.count(word)) r.fail("duplicate word \"" + word + "\"");
    auto& vectors = set.words[word];
    vectors.resize(n, std::vector<float>(set.dim));
    for (auto& v : vectors) {
      const auto raw = r.get_bytes(set.dim * sizeof(float), "feature values");
      std::memcpy(v.data(), raw.data(), raw.size());
    }
  }
  if (!r.at_end()) r.fail(std::to_string(r.remaining()) + " trailing bytes");
  return set;
}

void write_word_features(const std::filesystem::path& path, const WordFeatureSet& set) {
  write_file_atomic(path, serialize_word_features(set));
}

WordFeatureSet read_word_features(const std::filesystem::path& path) {
  return deserialize_word_features(read_file(path), path.string());
}

}  // namespace lexipivot
