#include "mdrnn/representation.h"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mdrnn/errors.h"

namespace mdrnn {
namespace {

bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_size(std::string_view s, std::size_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

WordVectors read_word_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  WordVectors wv;
  std::vector<double> values;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = fields_of(line);
    if (f.empty()) continue;
    std::size_t a, b;
    if (line_no == 1 && f.size() == 2 && parse_size(f[0], a) && parse_size(f[1], b)) {
      dim = b;
      continue;
    }
    if (dim == 0) dim = f.size() - 1;
    if (f.size() != dim + 1 || dim == 0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values, found " +
                      std::to_string(f.size() - 1));
    }
    wv.words.emplace_back(f[0]);
    for (std::size_t k = 1; k < f.size(); ++k) {
      double v;
      if (!parse_double(f[k], v)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": bad number '" + std::string(f[k]) + "'");
      }
      values.push_back(v);
    }
  }
  wv.vectors = Matrix(wv.words.size(), dim);
  std::copy(values.begin(), values.end(), wv.vectors.data());
  return wv;
}

void write_word_vectors(const std::filesystem::path& path, const WordVectors& wv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << wv.words.size() << ' ' << wv.vectors.cols() << '\n';
  char buf[40];
  for (std::size_t r = 0; r < wv.words.size(); ++r) {
    out << wv.words[r];
    for (double v : wv.vectors.row(r)) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

EmbeddingTable::EmbeddingTable(Vocabulary vocab, std::size_t dim, Rng& rng,
                               double range)
    : vocab_(std::move(vocab)),
      matrix_(uniform_init(rng, vocab_.size(), dim, -range, range)) {
  for (auto& v : matrix_.row(Vocabulary::kPad)) v = 0.0;
}

EmbeddingTable EmbeddingTable::with_pretrained(Vocabulary vocab,
                                               const WordVectors& pretrained,
                                               Rng& rng, double range) {
  for (const auto& w : pretrained.words) vocab.add(vocab.normalization().apply(w));
  EmbeddingTable table(std::move(vocab), pretrained.vectors.cols(), rng, range);
  for (std::size_t r = 0; r < pretrained.words.size(); ++r) {
    const std::size_t idx = table.vocab_.index(pretrained.words[r]);
    if (idx == Vocabulary::kPad) continue;
    auto dst = table.matrix_.row(idx);
    auto src = pretrained.vectors.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return table;
}

void EmbeddingTable::apply_gradient(std::size_t index, std::span<const double> grad,
                                    double lr) {
  if (!trainable_ || index == Vocabulary::kPad) return;
  axpy(-lr, grad, matrix_.row(index));
}

std::size_t FeatureConfig::width() const {
  std::size_t w = 0;
  if (capitalization) w += 5;
  w += gazetteers.size();
  if (triggers) w += 1;
  if (cache) w += cache_size;
  return w;
}

std::array<std::uint8_t, 5> capitalization_features(std::string_view token) {
  std::size_t upper = 0, lower = 0;
  for (char c : token) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isupper(u)) ++upper;
    if (std::islower(u)) ++lower;
  }
  std::array<std::uint8_t, 5> bits{};
  if (upper + lower == 0) {
    bits[4] = 1;
  } else if (upper == 0) {
    bits[0] = 1;
  } else if (lower == 0) {
    bits[1] = 1;
  } else {
    // Initial capital: first letter upper, every later letter lower.
    bool first_seen = false, initial = true;
    for (char c : token) {
      const auto u = static_cast<unsigned char>(c);
      if (!std::isalpha(u)) continue;
      if (!first_seen) {
        first_seen = true;
        initial = std::isupper(u);
      } else if (std::isupper(u)) {
        initial = false;
      }
    }
    bits[initial ? 2 : 3] = 1;
  }
  return bits;
}

std::vector<std::vector<std::uint8_t>> gazetteer_masks(
    const Sentence& sentence, const std::vector<Lexicon>& lexicons) {
  const std::size_t n = sentence.size();
  std::vector<std::vector<std::uint8_t>> masks(lexicons.size(),
                                               std::vector<std::uint8_t>(n, 0));
  for (std::size_t g = 0; g < lexicons.size(); ++g) {
    const Lexicon& lex = lexicons[g];
    std::size_t i = 0;
    while (i < n) {
      std::size_t best = 0;
      for (std::size_t len = std::min(lex.max_phrase_tokens(), n - i); len >= 1; --len) {
        if (lex.contains_tokens(sentence.tokens, i, len)) {
          best = len;
          break;
        }
      }
      if (best == 0) {
        ++i;
        continue;
      }
      for (std::size_t k = i; k < i + best; ++k) masks[g][k] = 1;
      i += best;
    }
  }
  return masks;
}

FeatureBits gazetteer_features(const Sentence& sentence, std::size_t i,
                               const std::vector<Lexicon>& lexicons) {
  const auto masks = gazetteer_masks(sentence, lexicons);
  FeatureBits bits(lexicons.size(), 0);
  for (std::size_t g = 0; g < lexicons.size(); ++g) bits[g] = masks[g].at(i);
  return bits;
}

FeatureBits trigger_features(const Sentence& sentence, std::size_t i,
                             const Lexicon& triggers) {
  return {static_cast<std::uint8_t>(triggers.contains(sentence.tokens.at(i).surface))};
}

void DocumentCache::enter_document(const std::string& doc_id) {
  if (!has_doc_ || doc_id != doc_id_) {
    labels_.clear();
    doc_id_ = doc_id;
    has_doc_ = true;
  }
}

void DocumentCache::observe(const Sentence& sentence,
                            const std::vector<std::size_t>& tag_ids) {
  for (std::size_t i = 0; i < sentence.size() && i < tag_ids.size(); ++i) {
    labels_[to_lower_ascii(sentence.tokens[i].surface)] = tag_ids[i];
  }
}

FeatureBits DocumentCache::features(std::string_view surface) const {
  FeatureBits bits(num_tags_, 0);
  auto it = labels_.find(to_lower_ascii(surface));
  if (it != labels_.end() && it->second < num_tags_) bits[it->second] = 1;
  return bits;
}

std::vector<FeatureBits> sentence_features(const Sentence& sentence,
                                           const FeatureConfig& config,
                                           const DocumentCache* cache) {
  const std::size_t n = sentence.size();
  std::vector<FeatureBits> out(n);
  std::vector<std::vector<std::uint8_t>> gaz;
  if (!config.gazetteers.empty()) gaz = gazetteer_masks(sentence, config.gazetteers);
  for (std::size_t i = 0; i < n; ++i) {
    FeatureBits& f = out[i];
    f.reserve(config.width());
    const auto& surface = sentence.tokens[i].surface;
    if (config.capitalization) {
      const auto caps = capitalization_features(surface);
      f.insert(f.end(), caps.begin(), caps.end());
    }
    for (const auto& mask : gaz) f.push_back(mask[i]);
    if (config.triggers) f.push_back(config.triggers->contains(surface));
    if (config.cache) {
      if (cache) {
        const auto bits = cache->features(surface);
        f.insert(f.end(), bits.begin(), bits.end());
      } else {
        f.insert(f.end(), config.cache_size, 0);
      }
    }
    if (f.size() != config.width()) {
      throw DimensionError("feature width " + std::to_string(f.size()) +
                           " != configured " + std::to_string(config.width()));
    }
  }
  return out;
}

std::size_t input_dim(std::size_t window, std::size_t embedding_dim,
                      std::size_t feature_width) {
  return (2 * window + 1) * (embedding_dim + feature_width);
}

InputEncoding encode_sentence(const Sentence& sentence, const EmbeddingTable& table,
                              std::vector<FeatureBits> features,
                              std::size_t window) {
  if (features.size() != sentence.size()) {
    throw DimensionError("encode_sentence: " + std::to_string(features.size()) +
                         " feature vectors for " + std::to_string(sentence.size()) +
                         " tokens");
  }
  InputEncoding enc;
  enc.window = window;
  enc.embedding_dim = table.dim();
  enc.feature_width = features.empty() ? 0 : features[0].size();
  for (const auto& f : features) {
    if (f.size() != enc.feature_width) {
      throw DimensionError("encode_sentence: ragged feature vectors");
    }
  }
  enc.token_ids.reserve(sentence.size());
  for (const auto& t : sentence.tokens) enc.token_ids.push_back(table.vocab().index(t.surface));
  enc.features = std::move(features);
  refresh_inputs(enc, table);
  return enc;
}

void refresh_inputs(InputEncoding& enc, const EmbeddingTable& table) {
  const std::size_t n = enc.token_ids.size();
  const std::size_t block = enc.block_width();
  const std::size_t dim = enc.input_dim();
  enc.inputs.assign(n, Vector(dim));
  for (std::size_t i = 0; i < n; ++i) {
    double* x = enc.inputs[i].data();
    for (std::size_t j = 0; j < 2 * enc.window + 1; ++j) {
      const auto pos = static_cast<std::ptrdiff_t>(i + j) -
                       static_cast<std::ptrdiff_t>(enc.window);
      if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(n)) continue;
      double* dst = x + j * block;
      const auto row = table.row(enc.token_ids[pos]);
      std::copy(row.begin(), row.end(), dst);
      const auto& f = enc.features[pos];
      for (std::size_t k = 0; k < f.size(); ++k) dst[enc.embedding_dim + k] = f[k];
    }
  }
}

void apply_input_gradients(const InputEncoding& enc,
                           const std::vector<Vector>& input_grads,
                           EmbeddingTable& table, double lr) {
  if (!table.trainable()) return;
  const std::size_t n = enc.token_ids.size();
  const std::size_t block = enc.block_width();
  std::map<std::size_t, Vector> rows;
  for (std::size_t i = 0; i < input_grads.size() && i < n; ++i) {
    const Vector& g = input_grads[i];
    if (g.empty()) continue;
    for (std::size_t j = 0; j < 2 * enc.window + 1; ++j) {
      const auto pos = static_cast<std::ptrdiff_t>(i + j) -
                       static_cast<std::ptrdiff_t>(enc.window);
      if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(n)) continue;
      const std::size_t id = enc.token_ids[pos];
      if (id == Vocabulary::kPad) continue;
      auto [it, inserted] = rows.try_emplace(id, enc.embedding_dim);
      axpy(1.0, g.span().subspan(j * block, enc.embedding_dim), it->second.span());
    }
  }
  for (const auto& [id, g] : rows) table.apply_gradient(id, g.span(), lr);
}

}  // namespace mdrnn
