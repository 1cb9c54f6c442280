#ifndef MDRNN_REPRESENTATION_H_
#define MDRNN_REPRESENTATION_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mdrnn/corpus.h"
#include "mdrnn/linalg.h"
#include "mdrnn/rng.h"
#include "mdrnn/tagging.h"

namespace mdrnn {

// Word vectors in the plain text interchange format.
struct WordVectors {
  std::vector<std::string> words;
  Matrix vectors;  // words.size() x dim
};

// Optional "count dim" header line, then "word v1 ... vdim" per line.
WordVectors read_word_vectors(const std::filesystem::path& path);
// Always writes the header; values use 17 significant digits.
void write_word_vectors(const std::filesystem::path& path, const WordVectors& wv);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Rows drawn uniformly from [-range, range]; the PAD row is zero.
  EmbeddingTable(Vocabulary vocab, std::size_t dim, Rng& rng, double range);

  // Extends `vocab` with every word of `pretrained` and copies those rows.
  // Rows without a pretrained vector keep their random initialization.
  static EmbeddingTable with_pretrained(Vocabulary vocab, const WordVectors& pretrained,
                                        Rng& rng, double range);

  const Vocabulary& vocab() const { return vocab_; }
  std::size_t dim() const { return matrix_.cols(); }
  std::size_t size() const { return matrix_.rows(); }
  const Matrix& matrix() const { return matrix_; }
  Matrix& mutable_matrix() { return matrix_; }
  std::span<const double> row(std::size_t index) const { return matrix_.row(index); }

  bool trainable() const { return trainable_; }
  void set_trainable(bool on) { trainable_ = on; }

  // row -= lr * grad, unless the row is PAD or the table is frozen.
  void apply_gradient(std::size_t index, std::span<const double> grad, double lr);

 private:
  Vocabulary vocab_;
  Matrix matrix_;
  bool trainable_ = true;
};

using FeatureBits = std::vector<std::uint8_t>;

struct FeatureConfig {
  bool capitalization = false;
  std::vector<Lexicon> gazetteers;
  std::optional<Lexicon> triggers;
  bool cache = false;
  // One bit per tag when the cache channel is enabled.
  std::size_t cache_size = 0;

  std::size_t width() const;
};

// Five shape bits: all-lower, all-upper, initial-cap, mixed-case, no-alpha.
std::array<std::uint8_t, 5> capitalization_features(std::string_view token);

// Greedy longest-match phrase marking over the whole sentence, one mask per
// lexicon: masks[g][i] is set when token i is inside a match of lexicon g.
std::vector<std::vector<std::uint8_t>> gazetteer_masks(
    const Sentence& sentence, const std::vector<Lexicon>& lexicons);
FeatureBits gazetteer_features(const Sentence& sentence, std::size_t i,
                               const std::vector<Lexicon>& lexicons);

FeatureBits trigger_features(const Sentence& sentence, std::size_t i,
                             const Lexicon& triggers);

// Most recent label per lowercased surface within the current document.
class DocumentCache {
 public:
  explicit DocumentCache(std::size_t num_tags = 0) : num_tags_(num_tags) {}

  // Resets when doc_id differs from the current document.
  void enter_document(const std::string& doc_id);
  void observe(const Sentence& sentence, const std::vector<std::size_t>& tag_ids);
  FeatureBits features(std::string_view surface) const;
  void clear() { labels_.clear(); }

 private:
  std::size_t num_tags_;
  std::string doc_id_;
  bool has_doc_ = false;
  std::unordered_map<std::string, std::size_t> labels_;
};

// f_i for every token. The cache channel reads `cache` as it stands; callers
// update it after the sentence has been labelled.
std::vector<FeatureBits> sentence_features(const Sentence& sentence,
                                           const FeatureConfig& config,
                                           const DocumentCache* cache);

struct InputEncoding {
  std::size_t window = 0;  // v_c
  std::size_t embedding_dim = 0;
  std::size_t feature_width = 0;
  std::vector<std::size_t> token_ids;
  std::vector<FeatureBits> features;
  std::vector<Vector> inputs;  // x_i

  std::size_t block_width() const { return embedding_dim + feature_width; }
  std::size_t input_dim() const { return (2 * window + 1) * block_width(); }
  std::size_t size() const { return inputs.size(); }
};

std::size_t input_dim(std::size_t window, std::size_t embedding_dim,
                      std::size_t feature_width);

// x_i = [w_{i-vc}, ..., w_{i+vc}] with w = [e, f] and zero blocks off the ends.
InputEncoding encode_sentence(const Sentence& sentence, const EmbeddingTable& table,
                              std::vector<FeatureBits> features,
                              std::size_t window);

// Rebuilds enc.inputs from the (possibly updated) table.
void refresh_inputs(InputEncoding& enc, const EmbeddingTable& table);

// Routes input gradients to embedding rows: for every window block of x_i
// the embedding slice updates the row of the token at that position.
void apply_input_gradients(const InputEncoding& enc,
                           const std::vector<Vector>& input_grads,
                           EmbeddingTable& table, double lr);

}  // namespace mdrnn

#endif  // MDRNN_REPRESENTATION_H_
