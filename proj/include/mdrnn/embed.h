#ifndef MDRNN_EMBED_H_
#define MDRNN_EMBED_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdrnn/corpus.h"
#include "mdrnn/linalg.h"
#include "mdrnn/representation.h"
#include "mdrnn/rng.h"

namespace mdrnn {

enum class EmbedObjective { kCbow, kSkipGram, kCConcat };

EmbedObjective parse_objective(std::string_view name);
std::string_view objective_name(EmbedObjective objective);

struct EmbedConfig {
  std::size_t dim = 300;
  std::size_t window = 5;
  // Subsampling threshold t; 0 disables subsampling.
  double subsample = 1e-5;
  std::size_t negatives = 10;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::size_t min_count = 5;
  std::uint64_t seed = 1;
  Normalization normalization;

  void validate() const;
};

// P(keep) = min(1, (sqrt(f / (t N)) + 1) * t N / f).
double keep_probability(std::size_t freq, std::size_t total, double t);
bool subsample_keep(std::size_t freq, std::size_t total, double t, Rng& rng);

// Noise distribution proportional to count^0.75 over non-reserved words.
class UnigramTable {
 public:
  explicit UnigramTable(const Vocabulary& vocab, double power = 0.75);

  double probability(std::size_t index) const;
  std::size_t sample(Rng& rng) const;
  std::size_t support() const { return support_; }

 private:
  std::vector<double> cumulative_;  // over vocabulary indices
  std::size_t support_ = 0;
};

// k draws, redrawing any draw equal to `exclude`.
std::vector<std::size_t> negative_sample(const UnigramTable& table, std::size_t exclude,
                                         std::size_t k, Rng& rng);

struct EmbedModel {
  Vocabulary vocab;
  EmbedObjective objective = EmbedObjective::kCbow;
  std::size_t window = 5;
  Matrix input;   // |V| x dim; the exported word vectors
  Matrix output;  // |V| x dim, or |V| x (2 window dim) for C-CONCAT

  std::size_t dim() const { return input.cols(); }
};

EmbedModel make_embed_model(Vocabulary vocab, EmbedObjective objective,
                            const EmbedConfig& config, Rng& rng);

// Row-sparse gradient of a negative-sampling loss.
struct SparseGradient {
  std::map<std::size_t, Vector> input;
  std::map<std::size_t, Vector> output;
};

void apply_gradient(EmbedModel& model, const SparseGradient& grad, double lr);

// Each *_loss computes -ln sig(u_target . h) - sum ln sig(-u_neg . h) and,
// when grad is non-null, its gradient. The *_update variants take one SGD
// step and return the loss before it.

// h = mean of the context input vectors.
double cbow_loss(const EmbedModel& model, std::size_t center,
                 std::span<const std::size_t> context,
                 std::span<const std::size_t> negatives, SparseGradient* grad);
double cbow_update(EmbedModel& model, std::size_t center,
                   std::span<const std::size_t> context,
                   std::span<const std::size_t> negatives, double lr);

// h = input vector of the center word, target = the context word.
double skipgram_loss(const EmbedModel& model, std::size_t center, std::size_t context,
                     std::span<const std::size_t> negatives, SparseGradient* grad);
double skipgram_update(EmbedModel& model, std::size_t center, std::size_t context,
                       std::span<const std::size_t> negatives, double lr);

// slots: 2*window vocabulary indices for offsets -window..-1, +1..+window in
// order; Vocabulary::kPad marks absent positions (zero vector).
double cconcat_loss(const EmbedModel& model, std::size_t center,
                    std::span<const std::size_t> slots,
                    std::span<const std::size_t> negatives, SparseGradient* grad);
double cconcat_update(EmbedModel& model, std::size_t center,
                      std::span<const std::size_t> slots,
                      std::span<const std::size_t> negatives, double lr);

using EmbedEpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Whitespace-tokenized sentences, one per line.
std::vector<std::vector<std::string>> read_text_corpus(const std::filesystem::path& path);

EmbedModel train_embeddings(const std::vector<std::vector<std::string>>& sentences,
                            EmbedObjective objective, const EmbedConfig& config,
                            const EmbedEpochCallback& on_epoch = {});

// Exports the input vectors of every non-reserved word.
WordVectors export_vectors(const EmbedModel& model);
void save_text(const EmbedModel& model, const std::filesystem::path& path);
WordVectors load_text(const std::filesystem::path& path);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace mdrnn

#endif  // MDRNN_EMBED_H_
