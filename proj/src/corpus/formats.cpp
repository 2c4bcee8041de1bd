#include "lexipivot/corpus/formats.hpp"

#include <cctype>
#include <cstring>
#include <sstream>

#include "lexipivot/binary_io.hpp"
#include "lexipivot/error.hpp"

namespace lexipivot {

namespace {

constexpr std::string_view kFeatureMagic = "LXPF";
constexpr std::uint32_t kFeatureVersion = 1;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t line,
                             const std::string& message) {
  throw FormatError(path.string() + ":" + std::to_string(line) + ": " + message);
}

std::uint64_t parse_u64(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  if (field.empty() || field.find_first_not_of("0123456789") != std::string::npos) {
    line_error(path, line, "expected an unsigned integer, got \"" + field + "\"");
  }
  try {
    return std::stoull(field);
  } catch (const std::exception&) {
    line_error(path, line, "integer out of range: \"" + field + "\"");
  }
}

}  // namespace

std::string serialize_features(const FeatureMap& features) {
  std::uint32_t K = 0, D = 0;
  if (!features.empty()) {
    K = static_cast<std::uint32_t>(features.begin()->second.regions);
    D = static_cast<std::uint32_t>(features.begin()->second.dim);
  }
  ByteWriter w;
  w.put_bytes(kFeatureMagic);
  w.put(kFeatureVersion);
  w.put(static_cast<std::uint32_t>(features.size()));
  w.put(K);
  w.put(D);
  for (const auto& [id, image] : features) {
    if (image.regions != K || image.dim != D) {
      throw FormatError("image " + std::to_string(id) + " is " + std::to_string(image.regions) +
                        "x" + std::to_string(image.dim) + " but the file holds " +
                        std::to_string(K) + "x" + std::to_string(D) + " images");
    }
    if (image.data.size() != image.regions * image.dim) {
      throw FormatError("image " + std::to_string(id) + " has inconsistent data length");
    }
    w.put(id);
    w.put_bytes(std::string_view(reinterpret_cast<const char*>(image.data.data()),
                                 image.data.size() * sizeof(float)));
  }
  return w.bytes();
}

FeatureMap deserialize_features(std::string_view bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(kFeatureMagic);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kFeatureVersion) r.fail("unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>("image count");
  const auto K = r.get<std::uint32_t>("region count");
  const auto D = r.get<std::uint32_t>("feature dim");
  const std::size_t per_image = sizeof(std::uint64_t) + std::size_t{K} * D * sizeof(float);
  if (r.remaining() != per_image * count) {
    r.fail("payload of " + std::to_string(r.remaining()) + " bytes does not hold " +
           std::to_string(count) + " images of " + std::to_string(K) + "x" + std::to_string(D));
  }
  FeatureMap out;
  for (std::uint32_t i = 0; i < count; ++i) {
    SpatialImage image;
    image.image_id = r.get<std::uint64_t>("image id");
    image.regions = K;
    image.dim = D;
    image.data.resize(std::size_t{K} * D);
    const auto raw = r.get_bytes(image.data.size() * sizeof(float), "image features");
    std::memcpy(image.data.data(), raw.data(), raw.size());
    if (out.count(image.image_id)) r.fail("duplicate image id " + std::to_string(image.image_id));
    out.emplace(image.image_id, std::move(image));
  }
  return out;
}

void write_features(const std::filesystem::path& path, const FeatureMap& features) {
  write_file_atomic(path, serialize_features(features));
}

FeatureMap read_features(const std::filesystem::path& path) {
  return deserialize_features(read_file(path), path.string());
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string format_captions(const std::vector<Caption>& captions) {
  std::string out;
  for (const auto& c : captions) {
    const auto text = c.raw_text();
    if (text.find_first_of("\t\n") != std::string::npos) {
      throw FormatError("caption text of image " + std::to_string(c.scene_id) + " contains tab or newline");
    }
    out += std::to_string(c.scene_id) + '\t' + c.language + '\t' + text + '\n';
  }
  return out;
}

void write_captions(const std::filesystem::path& path, const std::vector<Caption>& captions) {
  write_file_atomic(path, format_captions(captions));
}

std::vector<Caption> read_captions(const std::filesystem::path& path,
                                   const std::optional<std::string>& language,
                                   const FeatureMap* known_images) {
  std::vector<Caption> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 3) line_error(path, line_no, "expected 3 tab-separated fields");
    Caption c;
    c.scene_id = parse_u64(fields[0], path, line_no);
    c.language = fields[1];
    if (language && c.language != *language) continue;
    if (known_images && !known_images->count(c.scene_id)) {
      line_error(path, line_no, "caption references unknown image id " + fields[0]);
    }
    c.words = tokenize(fields[2]);
    if (c.words.empty()) line_error(path, line_no, "empty caption");
    out.push_back(std::move(c));
  }
  return out;
}

void write_lexicon(const std::filesystem::path& path, const GroundTruthLexicon& lexicon) {
  std::string out;
  for (const auto& [src, targets] : lexicon.entries) {
    const auto tag = lexicon.pos.find(src);
    for (const auto& tgt : targets) {
      out += src + '\t' + tgt;
      if (tag != lexicon.pos.end()) out += '\t' + tag->second;
      out += '\n';
    }
  }
  write_file_atomic(path, out);
}

GroundTruthLexicon read_lexicon(const std::filesystem::path& path) {
  GroundTruthLexicon lex;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_tabs(lines[i]);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty()) {
      line_error(path, i + 1, "expected source<TAB>target[<TAB>pos]");
    }
    lex.add(fields[0], fields[1], fields.size() == 3 ? fields[2] : std::string());
  }
  return lex;
}

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const int idx = static_cast<int>(i);
    out += std::to_string(i) + '\t' + vocab.word(idx) + '\t' + std::to_string(vocab.count(idx)) + '\n';
  }
  write_file_atomic(path, out);
}

Vocabulary read_vocabulary(const std::filesystem::path& path, const std::string& language) {
  const auto lines = read_lines(path);
  std::vector<std::pair<std::string, std::size_t>> words;
  std::size_t expected = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 3) line_error(path, i + 1, "expected index<TAB>word<TAB>count");
    if (parse_u64(fields[0], path, i + 1) != expected) line_error(path, i + 1, "indices must be consecutive");
    if (expected >= Vocabulary::kReservedCount) {
      words.emplace_back(fields[1], parse_u64(fields[2], path, i + 1));
    }
    ++expected;
  }
  if (expected < Vocabulary::kReservedCount) line_error(path, lines.size(), "missing reserved tokens");
  return Vocabulary::from_words(language, std::move(words));
}

ExternalDataset load_external_dataset(const std::filesystem::path& features_path,
                                      const std::filesystem::path& captions_path,
                                      const std::string& language) {
  ExternalDataset ds;
  ds.features = read_features(features_path);
  ds.captions = read_captions(captions_path, language, &ds.features);
  return ds;
}

}  // namespace lexipivot
