#include "lexipivot/induction/ranking.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "lexipivot/error.hpp"

namespace lexipivot {

namespace {

struct MethodName {
  RankingMethod method;
  const char* name;
};

constexpr MethodName kMethodNames[] = {
    {RankingMethod::linguistic, "linguistic"}, {RankingMethod::visual, "visual"},
    {RankingMethod::fused, "fused"},           {RankingMethod::cnn_mean, "cnn_mean"},
    {RankingMethod::cnn_avgmax, "cnn_avgmax"},
};

std::vector<std::string> default_targets(const WordFeatureTable& t, std::span<const std::string> targets) {
  if (!targets.empty()) return {targets.begin(), targets.end()};
  return t.words();
}

const Vector& visual_of(const WordFeatureTable& t, const std::string& word) {
  const auto& e = t.at(word);
  if (!e.visual) throw NoVisualError("word \"" + word + "\" has no visual features in " + t.language());
  return *e.visual;
}

const Vector& linguistic_of(const WordFeatureTable& t, const std::string& word) {
  const auto& e = t.at(word);
  if (e.linguistic.size() == 0) throw LookupError("word \"" + word + "\" has no embedding in " + t.language());
  return e.linguistic;
}

const std::vector<std::size_t>& set_of(const OccurrenceSets& s, const std::string& word) {
  const auto it = s.words.find(word);
  if (it == s.words.end()) throw LookupError("word \"" + word + "\" not in the " + s.language + " occurrence sets");
  if (it->second.empty()) throw NoVisualError("word \"" + word + "\" has no image features in " + s.language);
  return it->second;
}

template <typename Score>
TranslationRanking rank_with(const std::string& x, RankingMethod method, const std::vector<std::string>& targets,
                             Score&& score) {
  TranslationRanking r{x, method, {}};
  r.candidates.reserve(targets.size());
  for (const auto& y : targets) {
    if (auto s = score(y)) r.candidates.push_back({y, *s});
  }
  sort_candidates(r.candidates);
  return r;
}

// Gram-matrix backed avgmax over every (source, target) pair.
class AvgMaxScorer {
 public:
  AvgMaxScorer(const OccurrenceSets& src, const OccurrenceSets& tgt) : src_(src), tgt_(tgt) {
    if (src.pool.empty() || tgt.pool.empty()) return;
    const auto D = src.pool.front().size();
    Matrix P(D, static_cast<Eigen::Index>(src.pool.size())), Q(D, static_cast<Eigen::Index>(tgt.pool.size()));
    for (std::size_t i = 0; i < src.pool.size(); ++i) P.col(static_cast<Eigen::Index>(i)) = src.pool[i];
    for (std::size_t j = 0; j < tgt.pool.size(); ++j) Q.col(static_cast<Eigen::Index>(j)) = tgt.pool[j];
    gram_ = P.transpose() * Q;
  }

  double operator()(const std::string& x, const std::string& y) const {
    const auto& xs = set_of(src_, x);
    const auto& ys = set_of(tgt_, y);
    double total = 0.0;
    for (auto i : xs) {
      double best = -INFINITY;
      for (auto j : ys) best = std::max(best, gram_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      total += best;
    }
    return total / static_cast<double>(xs.size());
  }

 private:
  const OccurrenceSets& src_;
  const OccurrenceSets& tgt_;
  Matrix gram_;
};

}  // namespace

const char* to_string(RankingMethod method) noexcept {
  for (const auto& m : kMethodNames) {
    if (m.method == method) return m.name;
  }
  return "?";
}

RankingMethod ranking_method_from_string(const std::string& name) {
  for (const auto& m : kMethodNames) {
    if (name == m.name) return m.method;
  }
  throw ConfigError("unknown ranking method \"" + name + "\"");
}

std::vector<RankingMethod> all_ranking_methods() {
  std::vector<RankingMethod> out;
  for (const auto& m : kMethodNames) out.push_back(m.method);
  return out;
}

std::optional<std::size_t> TranslationRanking::rank_of(const std::string& target) const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].word == target) return i + 1;
  }
  return std::nullopt;
}

void sort_candidates(std::vector<Candidate>& candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.word < b.word;
  });
}

double linguistic_similarity(const WordFeatureTable& source, const WordFeatureTable& target, const std::string& x,
                             const std::string& y) {
  const auto& a = linguistic_of(source, x);
  const auto& b = linguistic_of(target, y);
  if (a.size() != b.size()) throw ShapeError("embedding sizes differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  return a.dot(b);
}

double visual_similarity(const WordFeatureTable& source, const WordFeatureTable& target, const std::string& x,
                         const std::string& y) {
  const auto& a = visual_of(source, x);
  const auto& b = visual_of(target, y);
  if (a.size() != b.size()) throw ShapeError("visual sizes differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  return a.dot(b);
}

double avgmax_similarity(const OccurrenceSets& source, const OccurrenceSets& target, const std::string& x,
                         const std::string& y) {
  const auto& xs = set_of(source, x);
  const auto& ys = set_of(target, y);
  double total = 0.0;
  for (auto i : xs) {
    double best = -INFINITY;
    for (auto j : ys) best = std::max(best, source.pool[i].dot(target.pool[j]));
    total += best;
  }
  return total / static_cast<double>(xs.size());
}

TranslationRanking linguistic_rank(const std::string& x, const WordFeatureTable& source,
                                   const WordFeatureTable& target, std::span<const std::string> targets) {
  linguistic_of(source, x);
  return rank_with(x, RankingMethod::linguistic, default_targets(target, targets),
                   [&](const std::string& y) -> std::optional<double> {
                     const auto& e = target.at(y);
                     if (e.linguistic.size() == 0) return std::nullopt;
                     return linguistic_similarity(source, target, x, y);
                   });
}

TranslationRanking visual_rank(const std::string& x, const WordFeatureTable& source, const WordFeatureTable& target,
                               std::span<const std::string> targets) {
  visual_of(source, x);
  return rank_with(x, RankingMethod::visual, default_targets(target, targets),
                   [&](const std::string& y) -> std::optional<double> {
                     if (!target.at(y).visual) return std::nullopt;
                     return visual_similarity(source, target, x, y);
                   });
}

TranslationRanking fused_rank(const std::string& x, const WordFeatureTable& source, const WordFeatureTable& target,
                              std::span<const std::string> targets, const FusionOptions& options,
                              FusionStats* stats) {
  if (options.lambda < 0.0 || options.lambda > 1.0) throw ConfigError("fusion lambda must be in [0, 1]");
  linguistic_of(source, x);
  const bool source_visual = source.at(x).visual.has_value();
  return rank_with(x, RankingMethod::fused, default_targets(target, targets),
                   [&](const std::string& y) -> std::optional<double> {
                     if (target.at(y).linguistic.size() == 0) return std::nullopt;
                     double s = options.lambda * linguistic_similarity(source, target, x, y);
                     const bool both = source_visual && target.at(y).visual.has_value();
                     if (both) s += (1.0 - options.lambda) * visual_similarity(source, target, x, y);
                     if (stats) {
                       ++stats->pairs;
                       if (!both) ++stats->fallback_pairs;
                     }
                     return s;
                   });
}

TranslationRanking cnn_mean_rank(const std::string& x, const WordFeatureTable& source_global,
                                 const WordFeatureTable& target_global, std::span<const std::string> targets) {
  auto r = visual_rank(x, source_global, target_global, targets);
  r.method = RankingMethod::cnn_mean;
  return r;
}

TranslationRanking cnn_avgmax_rank(const std::string& x, const OccurrenceSets& source_global,
                                   const OccurrenceSets& target_global, std::span<const std::string> targets) {
  set_of(source_global, x);
  std::vector<std::string> ys;
  if (!targets.empty()) {
    ys.assign(targets.begin(), targets.end());
  } else {
    for (const auto& [w, _] : target_global.words) ys.push_back(w);
  }
  return rank_with(x, RankingMethod::cnn_avgmax, ys, [&](const std::string& y) -> std::optional<double> {
    const auto it = target_global.words.find(y);
    if (it == target_global.words.end() || it->second.empty()) return std::nullopt;
    return avgmax_similarity(source_global, target_global, x, y);
  });
}

RankingRun rank_all(RankingMethod method, const InductionTables& tables, std::span<const std::string> sources,
                    std::span<const std::string> targets, const FusionOptions& options) {
  RankingRun run;
  std::vector<std::string> ys(targets.begin(), targets.end());
  if (ys.empty()) ys = tables.target.words();
  std::optional<AvgMaxScorer> avgmax;
  if (method == RankingMethod::cnn_avgmax) avgmax.emplace(tables.source_sets, tables.target_sets);
  for (const auto& x : sources) {
    try {
      switch (method) {
        case RankingMethod::linguistic:
          run.rankings.push_back(linguistic_rank(x, tables.source, tables.target, ys));
          break;
        case RankingMethod::visual:
          run.rankings.push_back(visual_rank(x, tables.source, tables.target, ys));
          break;
        case RankingMethod::fused:
          run.rankings.push_back(fused_rank(x, tables.source, tables.target, ys, options, &run.fusion));
          break;
        case RankingMethod::cnn_mean:
          run.rankings.push_back(cnn_mean_rank(x, tables.source_global, tables.target_global, ys));
          break;
        case RankingMethod::cnn_avgmax: {
          set_of(tables.source_sets, x);
          run.rankings.push_back(rank_with(x, method, ys, [&](const std::string& y) -> std::optional<double> {
            const auto it = tables.target_sets.words.find(y);
            if (it == tables.target_sets.words.end() || it->second.empty()) return std::nullopt;
            return (*avgmax)(x, y);
          }));
          break;
        }
      }
    } catch (const NoVisualError&) {
      run.skipped.push_back(x);
    }
  }
  return run;
}

std::string format_rankings(std::span<const TranslationRanking> rankings, std::size_t top_n) {
  std::string out;
  char score[64];
  for (const auto& r : rankings) {
    out += r.source;
    out += '\t';
    out += to_string(r.method);
    out += '\t';
    const std::size_t n = top_n ? std::min(top_n, r.candidates.size()) : r.candidates.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out += ',';
      std::snprintf(score, sizeof score, "%.6f", r.candidates[i].score);
      out += r.candidates[i].word;
      out += ':';
      out += score;
    }
    out += '\n';
  }
  return out;
}

std::vector<TranslationRanking> parse_rankings(const std::string& text, const std::string& source) {
  std::vector<TranslationRanking> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw FormatError(source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) fail("expected source<TAB>method<TAB>candidates");
    TranslationRanking r;
    r.source = line.substr(0, t1);
    try {
      r.method = ranking_method_from_string(line.substr(t1 + 1, t2 - t1 - 1));
    } catch (const ConfigError& e) {
      fail(e.what());
    }
    const std::string list = line.substr(t2 + 1);
    std::size_t pos = 0;
    while (pos < list.size()) {
      auto comma = list.find(',', pos);
      if (comma == std::string::npos) comma = list.size();
      const std::string item = list.substr(pos, comma - pos);
      const auto colon = item.rfind(':');
      if (colon == std::string::npos || colon == 0) fail("candidate \"" + item + "\" is not word:score");
      char* end = nullptr;
      const std::string num = item.substr(colon + 1);
      const double score = std::strtod(num.c_str(), &end);
      if (num.empty() || *end != '\0') fail("bad score in \"" + item + "\"");
      r.candidates.push_back({item.substr(0, colon), score});
      pos = comma + 1;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lexipivot
