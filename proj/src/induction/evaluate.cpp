#include "lexipivot/induction/evaluate.hpp"

#include <cstdio>

#include "json.hpp"
#include "lexipivot/error.hpp"

namespace lexipivot {

namespace {

// Best 1-based rank among the translations, 0 if none is ranked; nullopt
// when the word cannot be evaluated.
std::optional<std::size_t> best_rank(const TranslationRanking& r, const std::set<std::string>& gold,
                                     const std::set<std::string>& target_vocabulary) {
  bool in_vocab = false;
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    if (gold.count(r.candidates[i].word)) {
      best = i + 1;
      in_vocab = true;
      break;
    }
  }
  if (!in_vocab) {
    for (const auto& g : gold) in_vocab = in_vocab || target_vocabulary.count(g) != 0;
  }
  if (!in_vocab) return std::nullopt;
  return best;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

EvalReport evaluate(std::span<const TranslationRanking> rankings, const GroundTruthLexicon& lexicon,
                    std::span<const std::size_t> ks, const std::set<std::string>& target_vocabulary) {
  EvalReport report;
  if (!rankings.empty()) report.method = to_string(rankings.front().method);
  std::map<std::size_t, std::size_t> hits;
  for (auto k : ks) {
    if (k == 0) throw ConfigError("P@0 is undefined");
    hits[k] = 0;
  }
  double reciprocal_sum = 0.0;
  for (const auto& r : rankings) {
    const auto it = lexicon.entries.find(r.source);
    if (it == lexicon.entries.end()) {
      ++report.skipped;
      continue;
    }
    const auto rank = best_rank(r, it->second, target_vocabulary);
    if (!rank) {
      ++report.skipped;
      continue;
    }
    ++report.n;
    if (*rank == 0) continue;
    reciprocal_sum += 1.0 / static_cast<double>(*rank);
    for (auto& [k, h] : hits) {
      if (*rank <= k) ++h;
    }
  }
  if (report.n == 0) {
    throw EvaluationError("no evaluable source words (" + std::to_string(report.skipped) + " skipped)");
  }
  const double n = static_cast<double>(report.n);
  report.mrr = reciprocal_sum / n;
  for (const auto& [k, h] : hits) report.precision[k] = static_cast<double>(h) / n;
  return report;
}

std::vector<EvalReport> pos_breakdown(std::span<const TranslationRanking> rankings, const GroundTruthLexicon& lexicon,
                                      std::span<const std::size_t> ks,
                                      const std::set<std::string>& target_vocabulary) {
  std::map<std::string, std::vector<TranslationRanking>> groups;
  for (const auto& r : rankings) groups[lexicon.pos_of(r.source)].push_back(r);
  std::vector<EvalReport> out;
  for (const auto& [tag, group] : groups) {
    try {
      auto report = evaluate(group, lexicon, ks, target_vocabulary);
      report.pos = tag;
      out.push_back(std::move(report));
    } catch (const EvaluationError&) {
      // A tag with nothing evaluable has no row.
    }
  }
  return out;
}

std::vector<TranslationRanking> filter_by_pos(std::span<const TranslationRanking> rankings,
                                              const GroundTruthLexicon& lexicon, const std::set<std::string>& tags) {
  std::vector<TranslationRanking> out;
  for (const auto& r : rankings) {
    if (tags.count(lexicon.pos_of(r.source))) out.push_back(r);
  }
  return out;
}

std::string format_report_csv(std::span<const EvalReport> reports) {
  std::string out = "method,pos,n,mrr,p1,p5,p10,p20\n";
  for (const auto& r : reports) {
    out += r.method + "," + r.pos + "," + std::to_string(r.n) + "," + fixed(r.mrr);
    for (std::size_t k : {1, 5, 10, 20}) {
      const auto it = r.precision.find(k);
      out += "," + (it == r.precision.end() ? std::string() : percent(it->second));
    }
    out += "\n";
  }
  return out;
}

std::string format_report_json(std::span<const EvalReport> reports) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json row{{"method", r.method}, {"pos", r.pos}, {"n", r.n}, {"skipped", r.skipped},
                               {"mrr", std::stod(fixed(r.mrr))}};
    for (std::size_t k : {1, 5, 10, 20}) {
      const auto it = r.precision.find(k);
      row["p" + std::to_string(k)] = it == r.precision.end() ? nlohmann::ordered_json() : nlohmann::ordered_json(std::stod(percent(it->second)));
    }
    rows.push_back(row);
  }
  return rows.dump(2) + "\n";
}

}  // namespace lexipivot
