#include "lexipivot/localization/localize.hpp"

#include "lexipivot/error.hpp"
#include "lexipivot/model/sequence_loss.hpp"

namespace lexipivot {

namespace {

void check_caption(const MultiLingualModel& model, const std::string& language, const TokenSeq& caption) {
  model.vocab_size(language);
  if (caption.size() < 2) throw InputError("caption needs at least a begin and an end token");
}

}  // namespace

const char* to_string(LocalizationMethod method) noexcept {
  return method == LocalizationMethod::probe ? "probe" : "attention";
}

LocalizationMethod localization_method_from_string(const std::string& name) {
  if (name == "probe") return LocalizationMethod::probe;
  if (name == "attention") return LocalizationMethod::attention;
  throw ConfigError("unknown localization method \"" + name + "\" (expected probe or attention)");
}

Vector recompose(const Vector& alpha, const EncodedImage& regions) {
  if (alpha.size() != regions.count()) {
    throw ShapeError("recompose: " + std::to_string(alpha.size()) + " weights for " +
                     std::to_string(regions.count()) + " regions");
  }
  Vector out = Vector::Zero(regions.regions.rows());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) out += alpha[k] * regions.regions.col(k);
  return out;
}

std::vector<LocalizedOccurrence> localize(const MultiLingualModel& model, const std::string& language,
                                          const EncodedImage& regions, std::uint64_t image_id,
                                          const TokenSeq& caption) {
  check_caption(model, language, caption);
  const Eigen::Index K = regions.count();
  if (K == 0) throw ShapeError("localize over zero regions");
  std::vector<EncodedImage> single(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) single[static_cast<std::size_t>(k)].regions = regions.regions.col(k);
  const std::vector<TokenSeq> captions(static_cast<std::size_t>(K), caption);
  const auto trace = trace_teacher_forced(model, language, single, captions);

  std::vector<LocalizedOccurrence> out;
  out.reserve(caption.size() - 1);
  for (std::size_t t = 0; t + 1 < caption.size(); ++t) {
    Vector p(K);
    for (Eigen::Index k = 0; k < K; ++k) p[k] = trace.gold_probability[static_cast<std::size_t>(k)][t];
    const double total = p.sum();
    if (!(total > 0.0)) throw NumericError("probe probabilities vanished at position " + std::to_string(t + 1));
    LocalizedOccurrence occ;
    occ.word_index = caption[t + 1];
    occ.language = language;
    occ.image_id = image_id;
    occ.position = t + 1;
    occ.weights = p / total;
    occ.feature = recompose(occ.weights, regions);
    out.push_back(std::move(occ));
  }
  return out;
}

std::vector<LocalizedOccurrence> localize(const MultiLingualModel& model, const std::string& language,
                                          const SpatialImage& image, const TokenSeq& caption) {
  return localize(model, language, model.encode(image), image.image_id, caption);
}

std::vector<LocalizedOccurrence> localize_by_attention(const MultiLingualModel& model,
                                                       const std::string& language,
                                                       const EncodedImage& regions,
                                                       std::uint64_t image_id, const TokenSeq& caption) {
  check_caption(model, language, caption);
  const auto trace = trace_teacher_forced(model, language, std::span(&regions, 1), std::span(&caption, 1));
  std::vector<LocalizedOccurrence> out;
  out.reserve(caption.size() - 1);
  for (std::size_t t = 0; t + 1 < caption.size(); ++t) {
    LocalizedOccurrence occ;
    occ.word_index = caption[t + 1];
    occ.language = language;
    occ.image_id = image_id;
    occ.position = t + 1;
    occ.weights = trace.attention[0][t];
    occ.feature = trace.context[0][t];
    out.push_back(std::move(occ));
  }
  return out;
}

std::vector<LocalizedOccurrence> localize_by_attention(const MultiLingualModel& model,
                                                       const std::string& language,
                                                       const SpatialImage& image, const TokenSeq& caption) {
  return localize_by_attention(model, language, model.encode(image), image.image_id, caption);
}

std::vector<LocalizedOccurrence> localize_with(LocalizationMethod method, const MultiLingualModel& model,
                                               const std::string& language, const SpatialImage& image,
                                               const TokenSeq& caption) {
  return method == LocalizationMethod::probe ? localize(model, language, image, caption)
                                             : localize_by_attention(model, language, image, caption);
}

}  // namespace lexipivot
