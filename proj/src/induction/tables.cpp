#include "lexipivot/induction/tables.hpp"

#include <algorithm>
#include <cmath>

#include "lexipivot/error.hpp"

namespace lexipivot {

namespace {

Vector to_vector(const std::vector<float>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

std::vector<float> to_floats(const Vector& v) {
  std::vector<float> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  return out;
}

Vector mean_of(const std::vector<std::vector<float>>& set, std::size_t dim, bool normalize_each) {
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& f : set) {
    Vector v = to_vector(f);
    if (normalize_each) {
      const double n = v.norm();
      if (n > 0) v /= n;
    }
    sum += v;
  }
  return sum / static_cast<double>(set.size());
}

}  // namespace

const WordEntry& WordFeatureTable::at(const std::string& word) const {
  const auto it = entries_.find(word);
  if (it == entries_.end()) throw LookupError("word \"" + word + "\" not in the " + language_ + " table");
  return it->second;
}

std::vector<std::string> WordFeatureTable::words() const {
  std::vector<std::string> out;
  for (const auto& [w, _] : entries_) out.push_back(w);
  return out;
}

void WordFeatureTable::set_linguistic(const std::string& word, const Vector& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("embedding of \"" + word + "\" has zero or non-finite norm");
  entries_[word].linguistic = v / n;
}

void WordFeatureTable::set_visual(const std::string& word, const Vector& mean, std::size_t occurrences) {
  auto& e = entries_[word];
  e.occurrences = occurrences;
  const double n = mean.norm();
  if (!std::isfinite(n)) throw NumericError("visual vector of \"" + word + "\" is not finite");
  // Exact cancellation (e.g. v and -v) leaves no usable direction.
  if (n > 0.0) {
    e.visual = mean / n;
  } else {
    e.visual.reset();
  }
}

WordFeatureTable WordFeatureTable::build(const WordFeatureSet* linguistic, const WordFeatureSet* visual,
                                         bool normalize_occurrences) {
  if (linguistic && visual && linguistic->language != visual->language) {
    throw InputError("linguistic table is \"" + linguistic->language + "\" but visual table is \"" +
                     visual->language + "\"");
  }
  WordFeatureTable t(linguistic ? linguistic->language : visual ? visual->language : std::string());
  if (linguistic) {
    for (const auto& [word, vectors] : linguistic->words) {
      if (vectors.size() != 1) throw InputError("linguistic table must be aggregated (\"" + word + "\")");
      t.set_linguistic(word, to_vector(vectors[0]));
    }
  }
  if (visual) {
    for (const auto& [word, vectors] : visual->words) {
      if (vectors.empty()) continue;
      t.set_visual(word, mean_of(vectors, visual->dim, normalize_occurrences), vectors.size());
    }
  }
  return t;
}

WordFeatureSet linguistic_features(const MultiLingualModel& model, const Vocabulary& vocab) {
  const auto n = model.vocab_size(vocab.language());
  if (n != vocab.size()) {
    throw ConfigError("vocabulary of \"" + vocab.language() + "\" has " + std::to_string(vocab.size()) +
                      " entries, model expects " + std::to_string(n));
  }
  const auto w = model.view(vocab.language()).embedding->as_matrix();
  WordFeatureSet out;
  out.language = vocab.language();
  out.dim = static_cast<std::size_t>(w.rows());
  out.aggregated = true;
  for (int i = Vocabulary::kReservedCount; i < static_cast<int>(vocab.size()); ++i) {
    out.words[vocab.word(i)] = {to_floats(w.col(i))};
  }
  return out;
}

WordFeatureSet aggregate(const WordFeatureSet& occurrences) {
  if (occurrences.aggregated) return occurrences;
  WordFeatureSet out{occurrences.language, occurrences.dim, true, {}};
  for (const auto& [word, vectors] : occurrences.words) {
    if (vectors.empty()) continue;
    out.words[word] = {to_floats(mean_of(vectors, occurrences.dim, false))};
  }
  return out;
}

OccurrenceSets OccurrenceSets::build(const WordFeatureSet& occurrences) {
  OccurrenceSets out;
  out.language = occurrences.language;
  std::map<std::vector<float>, std::size_t> seen;
  for (const auto& [word, vectors] : occurrences.words) {
    std::vector<std::size_t> ids;
    for (const auto& f : vectors) {
      auto [it, inserted] = seen.emplace(f, out.pool.size());
      if (inserted) {
        Vector v = to_vector(f);
        const double n = v.norm();
        if (!(n > 0.0)) {
          seen.erase(it);
          continue;  // no direction to compare
        }
        out.pool.push_back(v / n);
      }
      ids.push_back(it->second);
    }
    out.words[word] = std::move(ids);
  }
  return out;
}

}  // namespace lexipivot
