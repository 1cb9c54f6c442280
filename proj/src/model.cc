#include "mdrnn/model.h"

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mdrnn/errors.h"

namespace mdrnn {
namespace {

using nlohmann::json;

std::vector<std::size_t> gold_ids(const Model& model, const Sentence& s) {
  std::vector<std::size_t> ids;
  ids.reserve(s.size());
  for (const auto& tag : gold_tags(s)) ids.push_back(model.tags.index(tag));
  return ids;
}

json lexicon_json(const Lexicon& lex) {
  return json{{"name", lex.name()}, {"entries", lex.sorted_entries()}};
}

Lexicon lexicon_from_json(const json& j) {
  Lexicon lex(j.at("name").get<std::string>());
  for (const auto& e : j.at("entries")) lex.add(e.get<std::string>());
  return lex;
}

void append_doubles(std::string& out, std::span<const double> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * sizeof(double));
  char* dst = out.data() + start;
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    std::memcpy(dst, &bits, sizeof bits);
    dst += sizeof bits;
  }
}

void read_doubles(const std::string& in, std::size_t& pos, std::span<double> out) {
  if (pos + out.size() * sizeof(double) > in.size()) {
    throw DataError("model file truncated");
  }
  for (double& v : out) {
    std::uint64_t bits;
    std::memcpy(&bits, in.data() + pos, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
    pos += sizeof bits;
  }
}

}  // namespace

Model build_model(const std::vector<Sentence>& train, const ModelSetup& setup,
                  const WordVectors* pretrained) {
  if (train.empty()) throw DataError("training set is empty");
  Rng rng(setup.seed);
  Vocabulary vocab = build_vocab(train, setup.min_count);
  EmbeddingTable table =
      pretrained ? EmbeddingTable::with_pretrained(std::move(vocab), *pretrained, rng,
                                                   setup.embedding_range)
                 : EmbeddingTable(std::move(vocab), setup.embedding_dim, rng,
                                  setup.embedding_range);
  TagSet tags = TagSet::from_corpus(train, setup.scheme);
  FeatureConfig features = setup.features;
  features.cache_size = features.cache ? tags.size() : 0;

  ModelSpec spec = setup.spec;
  spec.input_dim = input_dim(setup.context_window, table.dim(), features.width());
  spec.outputs = tags.size();
  spec.validate();
  Network net(spec, rng, setup.init_range);
  return Model{std::move(net), std::move(tags), std::move(features), std::move(table),
               setup.context_window};
}

std::vector<PreparedSentence> prepare_training_data(
    const Model& model, const std::vector<Sentence>& sentences) {
  std::vector<PreparedSentence> out;
  out.reserve(sentences.size());
  DocumentCache cache(model.tags.size());
  for (const auto& s : sentences) {
    cache.enter_document(s.doc_id);
    PreparedSentence p;
    p.gold = gold_ids(model, s);
    p.doc_id = s.doc_id;
    auto feats = sentence_features(s, model.features, model.features.cache ? &cache : nullptr);
    p.encoding = encode_sentence(s, model.embeddings, std::move(feats), model.context_window);
    if (model.features.cache) cache.observe(s, p.gold);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::vector<std::size_t>> tag_sentences(const Model& model,
                                                    const std::vector<Sentence>& sentences,
                                                    std::size_t workers) {
  // Documents in order of first appearance.
  std::vector<std::vector<std::size_t>> docs;
  std::map<std::string, std::size_t> doc_index;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto [it, inserted] = doc_index.try_emplace(sentences[i].doc_id, docs.size());
    if (inserted) docs.emplace_back();
    docs[it->second].push_back(i);
  }

  std::vector<std::vector<std::size_t>> result(sentences.size());
  auto run_doc = [&](const std::vector<std::size_t>& members) {
    DocumentCache cache(model.tags.size());
    for (std::size_t idx : members) {
      const Sentence& s = sentences[idx];
      auto feats = sentence_features(s, model.features, model.features.cache ? &cache : nullptr);
      const auto enc = encode_sentence(s, model.embeddings, std::move(feats),
                                       model.context_window);
      result[idx] = predict(model.network, enc.inputs);
      if (model.features.cache) cache.observe(s, result[idx]);
    }
  };

  workers = std::max<std::size_t>(1, std::min(workers, docs.size()));
  if (workers == 1) {
    for (const auto& d : docs) run_doc(d);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t d = next++; d < docs.size(); d = next++) run_doc(docs[d]);
    });
  }
  pool.clear();
  return result;
}

std::vector<std::vector<std::string>> tag_strings(
    const Model& model, const std::vector<std::vector<std::size_t>>& ids) {
  std::vector<std::vector<std::string>> out;
  out.reserve(ids.size());
  for (const auto& s : ids) {
    std::vector<std::string> tags;
    tags.reserve(s.size());
    for (auto id : s) tags.push_back(model.tags.tag(id));
    out.push_back(std::move(tags));
  }
  return out;
}

std::string serialize_model(const Model& model) {
  const ModelSpec& spec = model.spec();
  json header;
  header["spec"] = {
      {"arch", architecture_name(spec.arch)},
      {"encoder", cell_name(spec.encoder)},
      {"decoder", cell_name(spec.decoder)},
      {"input_dim", spec.input_dim},
      {"hidden", spec.hidden},
      {"outputs", spec.outputs},
      {"mesnil_context", spec.mesnil_context},
      {"shared_encoder", spec.shared_encoder},
      {"bias", spec.cell_options.bias},
      {"tanh_candidate", spec.cell_options.tanh_candidate},
  };
  header["context_window"] = model.context_window;
  header["tags"] = {{"scheme", scheme_name(model.tags.scheme())},
                    {"types", model.tags.types()}};
  json feats;
  feats["capitalization"] = model.features.capitalization;
  feats["gazetteers"] = json::array();
  for (const auto& g : model.features.gazetteers) feats["gazetteers"].push_back(lexicon_json(g));
  feats["triggers"] = model.features.triggers ? lexicon_json(*model.features.triggers)
                                              : json(nullptr);
  feats["cache"] = model.features.cache;
  feats["cache_size"] = model.features.cache_size;
  header["features"] = feats;
  const Vocabulary& vocab = model.embeddings.vocab();
  header["vocab"] = {{"lowercase", vocab.normalization().lowercase},
                     {"digits_to_zero", vocab.normalization().digits_to_zero},
                     {"words", vocab.words()},
                     {"counts", vocab.counts()}};
  header["embedding"] = {{"dim", model.embeddings.dim()},
                         {"trainable", model.embeddings.trainable()}};

  std::string payload;
  json blocks = json::array();
  model.network.for_each_param([&](const std::string& name, const Matrix& m) {
    blocks.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    append_doubles(payload, m.span());
  });
  const Matrix& emb = model.embeddings.matrix();
  blocks.push_back({{"name", "embeddings"}, {"rows", emb.rows()}, {"cols", emb.cols()}});
  append_doubles(payload, emb.span());
  header["blocks"] = blocks;

  const std::string head = header.dump();
  std::string out = std::string(kModelMagic) + " " + std::to_string(kModelVersion) + "\n";
  std::uint64_t len = head.size();
  char len_bytes[8];
  for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<char>((len >> (8 * i)) & 0xff);
  out.append(len_bytes, 8);
  out += head;
  out += payload;
  return out;
}

Model deserialize_model(const std::string& bytes) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string::npos || bytes.compare(0, kModelMagic.size(), kModelMagic) != 0) {
    throw DataError("not a model file (bad magic)");
  }
  const int version = std::stoi(bytes.substr(kModelMagic.size() + 1, eol));
  if (version != kModelVersion) {
    throw DataError("unsupported model version " + std::to_string(version));
  }
  std::size_t pos = eol + 1;
  if (pos + 8 > bytes.size()) throw DataError("model file truncated");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) {
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  }
  pos += 8;
  if (pos + len > bytes.size()) throw DataError("model file truncated");
  const json header = json::parse(bytes.substr(pos, len));
  pos += len;

  const json& js = header.at("spec");
  ModelSpec spec;
  spec.arch = parse_architecture(js.at("arch").get<std::string>());
  spec.encoder = parse_cell_kind(js.at("encoder").get<std::string>());
  spec.decoder = parse_cell_kind(js.at("decoder").get<std::string>());
  spec.input_dim = js.at("input_dim");
  spec.hidden = js.at("hidden");
  spec.outputs = js.at("outputs");
  spec.mesnil_context = js.at("mesnil_context");
  spec.shared_encoder = js.at("shared_encoder");
  spec.cell_options.bias = js.at("bias");
  spec.cell_options.tanh_candidate = js.at("tanh_candidate");

  Model model;
  model.network = Network(spec);
  model.context_window = header.at("context_window");
  model.tags = TagSet(parse_scheme(header.at("tags").at("scheme").get<std::string>()),
                      header.at("tags").at("types").get<std::vector<std::string>>());
  const json& jf = header.at("features");
  model.features.capitalization = jf.at("capitalization");
  for (const auto& g : jf.at("gazetteers")) model.features.gazetteers.push_back(lexicon_from_json(g));
  if (!jf.at("triggers").is_null()) model.features.triggers = lexicon_from_json(jf.at("triggers"));
  model.features.cache = jf.at("cache");
  model.features.cache_size = jf.at("cache_size");

  const json& jv = header.at("vocab");
  Normalization norm{jv.at("lowercase"), jv.at("digits_to_zero")};
  const auto words = jv.at("words").get<std::vector<std::string>>();
  const auto counts = jv.at("counts").get<std::vector<std::size_t>>();
  if (words.size() < 2 || words[0] != Vocabulary::kUnkWord ||
      words[1] != Vocabulary::kPadWord || counts.size() != words.size()) {
    throw DataError("model file: malformed vocabulary");
  }
  Vocabulary vocab(norm);
  for (std::size_t i = 2; i < words.size(); ++i) vocab.add(words[i], counts[i]);

  const json& blocks = header.at("blocks");
  std::size_t b = 0;
  model.network.for_each_param([&](const std::string& name, Matrix& m) {
    if (b >= blocks.size() || blocks[b].at("name") != name ||
        blocks[b].at("rows") != m.rows() || blocks[b].at("cols") != m.cols()) {
      throw DataError("model file: block " + std::to_string(b) + " does not match " + name +
                      " " + m.shape());
    }
    read_doubles(bytes, pos, m.span());
    ++b;
  });
  if (b + 1 != blocks.size() || blocks[b].at("name") != "embeddings") {
    throw DataError("model file: missing embedding block");
  }
  const std::size_t dim = header.at("embedding").at("dim");
  Rng unused(0);
  EmbeddingTable table(std::move(vocab), dim, unused, 0.0);
  if (blocks[b].at("rows") != table.size() || blocks[b].at("cols") != dim) {
    throw DataError("model file: embedding block shape mismatch");
  }
  read_doubles(bytes, pos, table.mutable_matrix().span());
  table.set_trainable(header.at("embedding").at("trainable"));
  model.embeddings = std::move(table);
  if (pos != bytes.size()) throw DataError("model file: trailing bytes");
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::string bytes = serialize_model(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace mdrnn
