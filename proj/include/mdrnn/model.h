#ifndef MDRNN_MODEL_H_
#define MDRNN_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mdrnn/corpus.h"
#include "mdrnn/network.h"
#include "mdrnn/representation.h"
#include "mdrnn/tagging.h"

namespace mdrnn {

// Everything needed to tag raw sentences: network weights, tag inventory,
// feature channels and the (fine-tuned) embedding table.
struct Model {
  Network network;
  TagSet tags;
  FeatureConfig features;
  EmbeddingTable embeddings;
  std::size_t context_window = 5;  // v_c

  const ModelSpec& spec() const { return network.spec(); }
};

struct ModelSetup {
  // input_dim and outputs are filled in by build_model.
  ModelSpec spec;
  TagScheme scheme = TagScheme::kBio2;
  FeatureConfig features;  // cache_size is set from the tag set
  std::size_t context_window = 5;
  // Used when no pretrained vectors are given.
  std::size_t embedding_dim = 300;
  std::size_t min_count = 1;
  double embedding_range = 0.1;
  double init_range = 0.0;  // 0 = Glorot
  std::uint64_t seed = 1;
};

// Vocabulary and tag set from `train`, embeddings from `pretrained` when
// non-null, random network weights from setup.seed.
Model build_model(const std::vector<Sentence>& train, const ModelSetup& setup,
                  const WordVectors* pretrained = nullptr);

// A sentence encoded for training: inputs plus gold tag indices.
struct PreparedSentence {
  InputEncoding encoding;
  std::vector<std::size_t> gold;
  std::string doc_id;
};

// Encodes sentences in document order. The cache channel sees the gold tags
// of earlier sentences of the same document.
std::vector<PreparedSentence> prepare_training_data(const Model& model,
                                                    const std::vector<Sentence>& sentences);

// Tags sentences with full-sentence decoding. With the cache channel on,
// each document is processed sequentially and the cache reads earlier
// predictions; distinct documents are spread over `workers` threads.
std::vector<std::vector<std::size_t>> tag_sentences(const Model& model,
                                                    const std::vector<Sentence>& sentences,
                                                    std::size_t workers = 1);

std::vector<std::vector<std::string>> tag_strings(
    const Model& model, const std::vector<std::vector<std::size_t>>& ids);

inline constexpr std::string_view kModelMagic = "MDRNN-MODEL";
inline constexpr int kModelVersion = 1;

// Container: magic + version line, 8-byte little-endian header length, JSON
// header describing every block, then little-endian float64 payloads in
// header order.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);
std::string serialize_model(const Model& model);
Model deserialize_model(const std::string& bytes);

}  // namespace mdrnn

#endif  // MDRNN_MODEL_H_
