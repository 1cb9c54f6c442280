#include "mdrnn/embed.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mdrnn/errors.h"

namespace mdrnn {
namespace {

// ln(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void add_row(std::map<std::size_t, Vector>& rows, std::size_t index,
             std::span<const double> values, double scale) {
  auto [it, inserted] = rows.try_emplace(index, values.size());
  axpy(scale, values, it->second.span());
}

// Negative-sampling loss for one hidden vector h; accumulates d/dh and the
// output-row gradients.
double negative_sampling(const Matrix& out, const Vector& h, std::size_t target,
                         std::span<const std::size_t> negatives, Vector* dh,
                         std::map<std::size_t, Vector>* dout) {
  double loss = 0.0;
  auto term = [&](std::size_t idx, bool positive) {
    const double s = dot(out.row(idx), h.span());
    loss += positive ? softplus(-s) : softplus(s);
    const double g = positive ? sigmoid(s) - 1.0 : sigmoid(s);
    if (dh) axpy(g, out.row(idx), dh->span());
    if (dout) add_row(*dout, idx, h.span(), g);
  };
  term(target, true);
  for (auto n : negatives) term(n, false);
  return loss;
}

void check_index(const EmbedModel& m, std::size_t idx) {
  if (idx >= m.vocab.size()) {
    throw DimensionError("word index " + std::to_string(idx) + " outside vocabulary of " +
                         std::to_string(m.vocab.size()));
  }
}

}  // namespace

EmbedObjective parse_objective(std::string_view name) {
  const std::string n = to_lower_ascii(name);
  if (n == "cbow") return EmbedObjective::kCbow;
  if (n == "skipgram" || n == "skip-gram" || n == "sg") return EmbedObjective::kSkipGram;
  if (n == "cconcat" || n == "c-concat") return EmbedObjective::kCConcat;
  throw ConfigError("unknown objective '" + std::string(name) +
                    "' (expected cbow, skipgram, cconcat)");
}

std::string_view objective_name(EmbedObjective objective) {
  switch (objective) {
    case EmbedObjective::kCbow: return "cbow";
    case EmbedObjective::kSkipGram: return "skipgram";
    case EmbedObjective::kCConcat: return "cconcat";
  }
  return "?";
}

void EmbedConfig::validate() const {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  if (window == 0) throw ConfigError("window must be positive");
  if (negatives == 0) throw ConfigError("negatives must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (subsample < 0.0) throw ConfigError("subsample threshold must be non-negative");
  if (min_count == 0) throw ConfigError("min_count must be positive");
}

double keep_probability(std::size_t freq, std::size_t total, double t) {
  if (t <= 0.0 || freq == 0) return 1.0;
  const double tn = t * static_cast<double>(total);
  const double f = static_cast<double>(freq);
  return std::min(1.0, (std::sqrt(f / tn) + 1.0) * tn / f);
}

bool subsample_keep(std::size_t freq, std::size_t total, double t, Rng& rng) {
  const double p = keep_probability(freq, total, t);
  return p >= 1.0 || rng.uniform() < p;
}

UnigramTable::UnigramTable(const Vocabulary& vocab, double power) {
  cumulative_.assign(vocab.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (i != Vocabulary::kUnk && i != Vocabulary::kPad && vocab.count(i) > 0) {
      total += std::pow(static_cast<double>(vocab.count(i)), power);
      ++support_;
    }
    cumulative_[i] = total;
  }
  if (total > 0) {
    for (auto& c : cumulative_) c /= total;
  }
}

double UnigramTable::probability(std::size_t index) const {
  if (index >= cumulative_.size()) return 0.0;
  return cumulative_[index] - (index ? cumulative_[index - 1] : 0.0);
}

std::size_t UnigramTable::sample(Rng& rng) const {
  if (support_ == 0) throw DataError("unigram table is empty");
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
  // Skip zero-mass entries sharing the same cumulative value.
  while (probability(idx) == 0.0 && idx + 1 < cumulative_.size()) ++idx;
  return idx;
}

std::vector<std::size_t> negative_sample(const UnigramTable& table, std::size_t exclude,
                                         std::size_t k, Rng& rng) {
  if (table.support() < 2) {
    throw DataError("negative sampling needs a vocabulary of at least two words");
  }
  std::vector<std::size_t> out;
  out.reserve(k);
  while (out.size() < k) {
    const std::size_t w = table.sample(rng);
    if (w != exclude) out.push_back(w);
  }
  return out;
}

EmbedModel make_embed_model(Vocabulary vocab, EmbedObjective objective,
                            const EmbedConfig& config, Rng& rng) {
  EmbedModel m;
  m.objective = objective;
  m.window = config.window;
  const std::size_t v = vocab.size();
  const double r = 0.5 / static_cast<double>(config.dim);
  m.input = uniform_init(rng, v, config.dim, -r, r);
  for (auto& x : m.input.row(Vocabulary::kPad)) x = 0.0;
  for (auto& x : m.input.row(Vocabulary::kUnk)) x = 0.0;
  const std::size_t out_cols =
      objective == EmbedObjective::kCConcat ? 2 * config.window * config.dim : config.dim;
  m.output = Matrix(v, out_cols);
  m.vocab = std::move(vocab);
  return m;
}

void apply_gradient(EmbedModel& model, const SparseGradient& grad, double lr) {
  for (const auto& [idx, g] : grad.input) {
    if (idx == Vocabulary::kPad) continue;
    axpy(-lr, g.span(), model.input.row(idx));
  }
  for (const auto& [idx, g] : grad.output) axpy(-lr, g.span(), model.output.row(idx));
}

double cbow_loss(const EmbedModel& model, std::size_t center,
                 std::span<const std::size_t> context,
                 std::span<const std::size_t> negatives, SparseGradient* grad) {
  if (context.empty()) throw DimensionError("cbow: empty context");
  check_index(model, center);
  Vector h(model.dim());
  const double inv = 1.0 / static_cast<double>(context.size());
  for (auto c : context) {
    check_index(model, c);
    axpy(inv, model.input.row(c), h.span());
  }
  Vector dh(model.dim());
  const double loss = negative_sampling(model.output, h, center, negatives,
                                        grad ? &dh : nullptr, grad ? &grad->output : nullptr);
  if (grad) {
    for (auto c : context) add_row(grad->input, c, dh.span(), inv);
  }
  return loss;
}

double cbow_update(EmbedModel& model, std::size_t center,
                   std::span<const std::size_t> context,
                   std::span<const std::size_t> negatives, double lr) {
  SparseGradient g;
  const double loss = cbow_loss(model, center, context, negatives, &g);
  apply_gradient(model, g, lr);
  return loss;
}

double skipgram_loss(const EmbedModel& model, std::size_t center, std::size_t context,
                     std::span<const std::size_t> negatives, SparseGradient* grad) {
  check_index(model, center);
  check_index(model, context);
  const auto row = model.input.row(center);
  Vector h(std::vector<double>(row.begin(), row.end()));
  Vector dh(model.dim());
  const double loss = negative_sampling(model.output, h, context, negatives,
                                        grad ? &dh : nullptr, grad ? &grad->output : nullptr);
  if (grad) add_row(grad->input, center, dh.span(), 1.0);
  return loss;
}

double skipgram_update(EmbedModel& model, std::size_t center, std::size_t context,
                       std::span<const std::size_t> negatives, double lr) {
  SparseGradient g;
  const double loss = skipgram_loss(model, center, context, negatives, &g);
  apply_gradient(model, g, lr);
  return loss;
}

double cconcat_loss(const EmbedModel& model, std::size_t center,
                    std::span<const std::size_t> slots,
                    std::span<const std::size_t> negatives, SparseGradient* grad) {
  const std::size_t d = model.dim();
  if (slots.size() * d != model.output.cols()) {
    throw DimensionError("cconcat: " + std::to_string(slots.size()) + " slots for output width " +
                         std::to_string(model.output.cols()));
  }
  check_index(model, center);
  Vector h(slots.size() * d);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    check_index(model, slots[s]);
    if (slots[s] == Vocabulary::kPad) continue;
    const auto row = model.input.row(slots[s]);
    std::copy(row.begin(), row.end(), h.data() + s * d);
  }
  Vector dh(h.size());
  const double loss = negative_sampling(model.output, h, center, negatives,
                                        grad ? &dh : nullptr, grad ? &grad->output : nullptr);
  if (grad) {
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (slots[s] == Vocabulary::kPad) continue;
      add_row(grad->input, slots[s], dh.span().subspan(s * d, d), 1.0);
    }
  }
  return loss;
}

double cconcat_update(EmbedModel& model, std::size_t center,
                      std::span<const std::size_t> slots,
                      std::span<const std::size_t> negatives, double lr) {
  SparseGradient g;
  const double loss = cconcat_loss(model, center, slots, negatives, &g);
  apply_gradient(model, g, lr);
  return loss;
}

std::vector<std::vector<std::string>> read_text_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

EmbedModel train_embeddings(const std::vector<std::vector<std::string>>& sentences,
                            EmbedObjective objective, const EmbedConfig& config,
                            const EmbedEpochCallback& on_epoch) {
  config.validate();
  const Normalization& norm = config.normalization;
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& w : s) ++counts[norm.apply(w)];
  }
  Vocabulary vocab = build_vocab_from_counts(counts, config.min_count, norm);
  if (vocab.size() <= 2) throw DataError("embedding corpus is empty after min_count filtering");

  // Corpus as vocabulary indices; words below min_count are dropped.
  std::vector<std::vector<std::size_t>> ids;
  std::size_t train_words = 0;
  for (const auto& s : sentences) {
    std::vector<std::size_t> row;
    for (const auto& w : s) {
      const std::size_t id = vocab.index_normalized(norm.apply(w));
      if (id != Vocabulary::kUnk) row.push_back(id);
    }
    train_words += row.size();
    ids.push_back(std::move(row));
  }

  Rng rng(config.seed);
  EmbedModel model = make_embed_model(std::move(vocab), objective, config, rng);
  const UnigramTable table(model.vocab);
  const std::size_t w = config.window;
  const double total_steps = static_cast<double>(config.epochs * train_words) + 1.0;
  std::size_t processed = 0;

  std::vector<std::size_t> kept, context, slots(2 * w);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss = 0.0;
    std::size_t updates = 0;
    for (const auto& row : ids) {
      kept.clear();
      for (auto id : row) {
        if (subsample_keep(model.vocab.count(id), train_words, config.subsample, rng)) {
          kept.push_back(id);
        }
      }
      processed += row.size();
      const double lr = config.learning_rate *
                        std::max(1e-4, 1.0 - static_cast<double>(processed) / total_steps);
      for (std::size_t p = 0; p < kept.size(); ++p) {
        const std::size_t center = kept[p];
        const std::size_t lo = p >= w ? p - w : 0;
        const std::size_t hi = std::min(kept.size() - 1, p + w);
        switch (objective) {
          case EmbedObjective::kCbow: {
            context.clear();
            for (std::size_t q = lo; q <= hi; ++q) {
              if (q != p) context.push_back(kept[q]);
            }
            if (context.empty()) break;
            const auto neg = negative_sample(table, center, config.negatives, rng);
            loss += cbow_update(model, center, context, neg, lr);
            ++updates;
            break;
          }
          case EmbedObjective::kSkipGram:
            for (std::size_t q = lo; q <= hi; ++q) {
              if (q == p) continue;
              const auto neg = negative_sample(table, kept[q], config.negatives, rng);
              loss += skipgram_update(model, center, kept[q], neg, lr);
              ++updates;
            }
            break;
          case EmbedObjective::kCConcat: {
            if (kept.size() < 2) break;
            for (std::size_t s = 0; s < 2 * w; ++s) {
              const auto offset = s < w ? static_cast<std::ptrdiff_t>(s) - static_cast<std::ptrdiff_t>(w)
                                        : static_cast<std::ptrdiff_t>(s - w + 1);
              const auto q = static_cast<std::ptrdiff_t>(p) + offset;
              slots[s] = (q < 0 || q >= static_cast<std::ptrdiff_t>(kept.size()))
                             ? Vocabulary::kPad
                             : kept[static_cast<std::size_t>(q)];
            }
            const auto neg = negative_sample(table, center, config.negatives, rng);
            loss += cconcat_update(model, center, slots, neg, lr);
            ++updates;
            break;
          }
        }
      }
    }
    if (on_epoch) on_epoch(epoch, updates ? loss / static_cast<double>(updates) : 0.0);
  }
  return model;
}

WordVectors export_vectors(const EmbedModel& model) {
  WordVectors wv;
  const std::size_t n = model.vocab.size() - 2;
  wv.vectors = Matrix(n, model.dim());
  for (std::size_t i = 2; i < model.vocab.size(); ++i) {
    wv.words.push_back(model.vocab.word(i));
    const auto src = model.input.row(i);
    std::copy(src.begin(), src.end(), wv.vectors.row(i - 2).begin());
  }
  return wv;
}

void save_text(const EmbedModel& model, const std::filesystem::path& path) {
  write_word_vectors(path, export_vectors(model));
}

WordVectors load_text(const std::filesystem::path& path) { return read_word_vectors(path); }

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

}  // namespace mdrnn
