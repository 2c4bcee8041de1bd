#include "lexipivot/model/generation.hpp"

#include <algorithm>
#include <cmath>

#include "lexipivot/corpus/vocabulary.hpp"
#include "lexipivot/error.hpp"

namespace lexipivot {

namespace {

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

bool generable(int token) { return token != Vocabulary::kPad && token != Vocabulary::kBegin; }

struct Hypothesis {
  TokenSeq tokens;
  double score = 0.0;
  DecodeState state;
};

// Higher score first; equal scores fall back to the lexicographically
// smaller sequence so results never depend on container order.
bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

TokenSeq greedy(const MultiLingualModel& model, const std::string& language, const EncodedImage& regions,
                std::size_t max_len) {
  TokenSeq out{Vocabulary::kBegin};
  DecodeState state = model.initial_state();
  while (out.size() < max_len) {
    const auto step = model.decode_step(language, state, out.back(), regions);
    state = step.state;
    int best = -1;
    for (int k = 0; k < static_cast<int>(step.logits.size()); ++k) {
      if (generable(k) && (best < 0 || step.logits[k] > step.logits[best])) best = k;
    }
    out.push_back(best);
    if (best == Vocabulary::kEnd) break;
  }
  return out;
}

TokenSeq beam(const MultiLingualModel& model, const std::string& language, const EncodedImage& regions,
              std::size_t max_len, std::size_t width) {
  std::vector<Hypothesis> alive{Hypothesis{{Vocabulary::kBegin}, 0.0, model.initial_state()}};
  std::vector<Hypothesis> finished;
  while (!alive.empty()) {
    if (!finished.empty() && finished.front().score >= alive.front().score) break;
    std::vector<Hypothesis> candidates;
    for (const auto& h : alive) {
      const auto step = model.decode_step(language, h.state, h.tokens.back(), regions);
      const Vector lp = log_softmax(step.logits);
      for (int k = 0; k < static_cast<int>(lp.size()); ++k) {
        if (!generable(k)) continue;
        Hypothesis next{h.tokens, h.score + lp[k], step.state};
        next.tokens.push_back(k);
        candidates.push_back(std::move(next));
      }
    }
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(), better);
    candidates.resize(keep);
    alive.clear();
    for (auto& c : candidates) {
      if (c.tokens.back() == Vocabulary::kEnd || c.tokens.size() >= max_len) {
        finished.push_back(std::move(c));
      } else {
        alive.push_back(std::move(c));
      }
    }
    std::sort(finished.begin(), finished.end(), better);
  }
  return finished.front().tokens;
}

}  // namespace

TokenSeq generate_caption(const MultiLingualModel& model, const std::string& language,
                          const EncodedImage& regions, const GenerationOptions& options) {
  const std::size_t max_len = options.max_len ? options.max_len : model.config().max_len;
  if (max_len < 2) throw ConfigError("generation needs max_len >= 2");
  model.vocab_size(language);
  if (options.mode == DecodeMode::greedy) return greedy(model, language, regions, max_len);
  if (options.beam_width == 0) throw ConfigError("beam width must be positive");
  return beam(model, language, regions, max_len, options.beam_width);
}

TokenSeq generate_caption(const MultiLingualModel& model, const std::string& language,
                          const SpatialImage& image, const GenerationOptions& options) {
  return generate_caption(model, language, model.encode(image), options);
}

}  // namespace lexipivot
