#include <doctest.h>

#include <cmath>

#include "mdrnn/embed.h"
#include "mdrnn/errors.h"
#include "test_util.h"

using namespace mdrnn;

namespace {

using LD = long double;

Vocabulary vocab_of(std::initializer_list<std::pair<const char*, std::size_t>> words) {
  Vocabulary v;
  for (const auto& [w, c] : words) v.add(w, c);
  return v;
}

EmbedModel random_model(EmbedObjective obj, std::size_t window, std::size_t dim,
                        std::uint64_t seed) {
  EmbedConfig c;
  c.dim = dim;
  c.window = window;
  Rng rng(seed);
  EmbedModel m = make_embed_model(vocab_of({{"a", 3}, {"b", 2}, {"c", 1}}), obj, c, rng);
  for (auto& x : m.input.span()) x = rng.uniform(-1, 1);
  for (auto& x : m.output.span()) x = rng.uniform(-1, 1);
  for (auto& x : m.input.row(Vocabulary::kPad)) x = 0.0;
  return m;
}

// Extended-precision negative-sampling loss from an explicit hidden vector.
LD ns_loss(const EmbedModel& m, const std::vector<LD>& h, std::size_t target,
           const std::vector<std::size_t>& negs) {
  auto score = [&](std::size_t w) {
    LD s = 0;
    for (std::size_t k = 0; k < h.size(); ++k) s += m.output(w, k) * h[k];
    return s;
  };
  auto log_sig = [](LD z) { return -std::log1p(std::exp(-z)); };
  LD loss = -log_sig(score(target));
  for (auto n : negs) loss -= log_sig(-score(n));
  return loss;
}

std::vector<LD> hidden(const EmbedModel& m, EmbedObjective obj, std::size_t center,
                       const std::vector<std::size_t>& ctx) {
  const std::size_t d = m.dim();
  if (obj == EmbedObjective::kCbow) {
    std::vector<LD> h(d, 0);
    for (auto c : ctx)
      for (std::size_t k = 0; k < d; ++k) h[k] += m.input(c, k) / LD(ctx.size());
    return h;
  }
  if (obj == EmbedObjective::kSkipGram) {
    std::vector<LD> h(d);
    for (std::size_t k = 0; k < d; ++k) h[k] = m.input(center, k);
    return h;
  }
  std::vector<LD> h;
  for (auto c : ctx)
    for (std::size_t k = 0; k < d; ++k) h.push_back(c == Vocabulary::kPad ? 0 : m.input(c, k));
  return h;
}

LD oracle_loss(const EmbedModel& m, EmbedObjective obj, std::size_t center,
               const std::vector<std::size_t>& ctx, const std::vector<std::size_t>& negs) {
  if (obj == EmbedObjective::kSkipGram) return ns_loss(m, hidden(m, obj, center, ctx), ctx[0], negs);
  return ns_loss(m, hidden(m, obj, center, ctx), center, negs);
}

double loss_with_grad(const EmbedModel& m, EmbedObjective obj, std::size_t center,
                      const std::vector<std::size_t>& ctx, const std::vector<std::size_t>& negs,
                      SparseGradient* g) {
  switch (obj) {
    case EmbedObjective::kCbow: return cbow_loss(m, center, ctx, negs, g);
    case EmbedObjective::kSkipGram: return skipgram_loss(m, center, ctx[0], negs, g);
    case EmbedObjective::kCConcat: return cconcat_loss(m, center, ctx, negs, g);
  }
  return 0;
}

double grad_check(EmbedObjective obj, std::uint64_t seed) {
  const std::size_t window = 1, dim = 2;
  EmbedModel m = random_model(obj, window, dim, seed);
  const std::size_t a = m.vocab.index("a"), b = m.vocab.index("b"), c = m.vocab.index("c");
  std::vector<std::size_t> ctx;
  if (obj == EmbedObjective::kCbow) ctx = {b, c, b};
  if (obj == EmbedObjective::kSkipGram) ctx = {b};
  if (obj == EmbedObjective::kCConcat) ctx = {b, c};
  const std::vector<std::size_t> negs{c, b};
  SparseGradient g;
  const double loss = loss_with_grad(m, obj, a, ctx, negs, &g);
  double worst = std::abs(loss - double(oracle_loss(m, obj, a, ctx, negs))) / std::max(1.0, loss);
  const double eps = 1e-5;
  auto check = [&](Matrix& mat, const std::map<std::size_t, Vector>& grads) {
    for (std::size_t r = 0; r < mat.rows(); ++r) {
      for (std::size_t k = 0; k < mat.cols(); ++k) {
        if (r == Vocabulary::kPad && &mat == &m.input) continue;
        const double keep = mat(r, k);
        mat(r, k) = keep + eps;
        const LD up = oracle_loss(m, obj, a, ctx, negs);
        mat(r, k) = keep - eps;
        const LD down = oracle_loss(m, obj, a, ctx, negs);
        mat(r, k) = keep;
        const double num = double((up - down) / (2 * eps));
        const auto it = grads.find(r);
        const double ana = it == grads.end() ? 0.0 : it->second[k];
        worst = std::max(worst, std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-8}));
      }
    }
  };
  check(m.input, g.input);
  check(m.output, g.output);
  return worst;
}

}  // namespace

TEST_CASE("subsampling keep probability") {
  CHECK(keep_probability(10, 1000000, 1e-5) >= 1.0);  // f/N = t
  CHECK(keep_probability(5, 1000000, 1e-5) >= 1.0);
  const double p = keep_probability(1000, 1000000, 1e-5);  // f/N = 100 t
  CHECK(p == doctest::Approx((std::sqrt(100.0) + 1) / 100).epsilon(1e-12));
  CHECK(p == doctest::Approx(0.11));
  CHECK(keep_probability(1000, 1000, 1e9) >= 1.0);
  CHECK(keep_probability(1000, 1000, 0.0) == 1.0);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(subsample_keep(3, 1000000, 1e-5, rng));
  int kept = 0;
  for (int i = 0; i < 100000; ++i) kept += subsample_keep(1000, 1000000, 1e-5, rng);
  CHECK(kept / 100000.0 == doctest::Approx(0.11).epsilon(0.03));
}

TEST_CASE("unigram table probabilities") {
  const UnigramTable t(vocab_of({{"a", 4}, {"b", 1}}));
  const double pa = std::pow(4.0, 0.75) / (std::pow(4.0, 0.75) + 1.0);
  CHECK(t.probability(2) == doctest::Approx(pa).epsilon(1e-12));
  CHECK(t.probability(2) == doctest::Approx(0.7388).epsilon(1e-4));
  CHECK(t.probability(Vocabulary::kUnk) == 0.0);
  CHECK(t.probability(Vocabulary::kPad) == 0.0);
  double sum = 0;
  for (std::size_t i = 0; i < 4; ++i) sum += t.probability(i);
  CHECK(sum == doctest::Approx(1.0));
  const UnigramTable u(vocab_of({{"a", 5}, {"b", 5}, {"c", 5}}));
  for (std::size_t i = 2; i < 5; ++i) CHECK(u.probability(i) == doctest::Approx(1.0 / 3));
}

TEST_CASE("negative sampler frequencies") {
  const Vocabulary v = vocab_of({{"a", 100}, {"b", 30}, {"c", 7}, {"d", 1}});
  const UnigramTable t(v);
  Rng rng(5);
  std::vector<std::size_t> counts(v.size(), 0);
  const std::size_t draws = 1000000;
  for (std::size_t i = 0; i < draws; ++i) ++counts[t.sample(rng)];
  double z = 0;
  for (std::size_t i = 2; i < v.size(); ++i) z += std::pow(double(v.count(i)), 0.75);
  for (std::size_t i = 2; i < v.size(); ++i) {
    const double expected = std::pow(double(v.count(i)), 0.75) / z;
    CHECK(std::abs(double(counts[i]) / draws - expected) / expected < 0.01);
  }
  CHECK(counts[0] == 0);
  CHECK(counts[1] == 0);

  const auto negs = negative_sample(t, 2, 50, rng);
  CHECK(negs.size() == 50);
  for (auto n : negs) CHECK(n != 2);
  CHECK_THROWS_AS(negative_sample(UnigramTable(vocab_of({{"a", 3}})), 2, 1, rng), DataError);
}

TEST_CASE("objectives pass finite-difference checks") {
  for (auto obj : {EmbedObjective::kCbow, EmbedObjective::kSkipGram, EmbedObjective::kCConcat}) {
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) worst = std::max(worst, grad_check(obj, seed));
    INFO(objective_name(obj));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("cbow structure") {
  EmbedModel m = random_model(EmbedObjective::kCbow, 2, 3, 4);
  const std::size_t a = 2, b = 3, c = 4;
  // A single context word: h is that word's vector.
  const std::vector<LD> h = hidden(m, EmbedObjective::kCbow, a, {b});
  const std::vector<std::size_t> negs{c};
  CHECK(cbow_loss(m, a, std::vector<std::size_t>{b}, negs, nullptr) ==
        doctest::Approx(double(ns_loss(m, h, a, negs))));
  // Permuted contexts give identical updates.
  EmbedModel m1 = m, m2 = m;
  const double l1 = cbow_update(m1, a, std::vector<std::size_t>{b, c, b}, negs, 0.1);
  const double l2 = cbow_update(m2, a, std::vector<std::size_t>{b, b, c}, negs, 0.1);
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-15));
  CHECK(testutil::max_abs_diff(Vector(std::vector<double>(m1.input.span().begin(), m1.input.span().end())),
                               Vector(std::vector<double>(m2.input.span().begin(), m2.input.span().end()))) < 1e-15);
  CHECK_THROWS(cbow_loss(m, a, std::vector<std::size_t>{}, negs, nullptr));
}

TEST_CASE("skip-gram structure") {
  EmbedConfig cfg;
  cfg.dim = 3;
  Rng rng(1);
  EmbedModel m = make_embed_model(vocab_of({{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}}),
                                  EmbedObjective::kSkipGram, cfg, rng);
  m.input.fill(0.0);
  const std::vector<std::size_t> negs{4, 5};
  CHECK(skipgram_loss(m, 2, 3, negs, nullptr) == doctest::Approx(3 * std::log(2.0)));
  // Output rows start at zero, so fill them to make the centre row move too.
  for (auto& x : m.input.span()) x = 0.1;
  for (auto& x : m.input.row(Vocabulary::kPad)) x = 0.0;
  SparseGradient g;
  skipgram_loss(m, 2, 3, negs, &g);
  CHECK(g.output.size() == negs.size() + 1);
  CHECK(g.input.size() == 1);
  CHECK(g.input.count(2) == 1);
}

TEST_CASE("c-concat structure") {
  EmbedModel m = random_model(EmbedObjective::kCConcat, 1, 3, 6);
  const std::size_t a = 2, b = 3, c = 4;
  const std::vector<std::size_t> negs{c};
  const std::size_t P = Vocabulary::kPad;
  EmbedModel zeros = m;
  zeros.input.fill(0.0);
  const std::vector<std::size_t> pads{P, P};
  CHECK(cconcat_loss(m, a, pads, negs, nullptr) == doctest::Approx(2 * std::log(2.0)));
  CHECK(cconcat_loss(m, a, std::vector<std::size_t>{b, c}, negs, nullptr) !=
        doctest::Approx(cconcat_loss(m, a, std::vector<std::size_t>{c, b}, negs, nullptr)));
  CHECK(hidden(m, EmbedObjective::kCConcat, a, {b, c}) != hidden(m, EmbedObjective::kCConcat, a, {c, b}));
  SparseGradient g;
  cconcat_loss(m, a, std::vector<std::size_t>{P, b}, negs, &g);
  CHECK(g.input.count(P) == 0);
  CHECK_THROWS_AS(cconcat_loss(m, a, std::vector<std::size_t>{b}, negs, nullptr), DimensionError);
}

TEST_CASE("order fixture separates c-concat from cbow") {
  // Two sentences that differ only in context order around the centre.
  EmbedModel base = random_model(EmbedObjective::kCConcat, 1, 3, 8);
  EmbedModel cb = random_model(EmbedObjective::kCbow, 1, 3, 8);
  const std::size_t a = 2, b = 3, c = 4;
  const std::vector<std::size_t> negs{c};
  EmbedModel c1 = base, c2 = base, b1 = cb, b2 = cb;
  cconcat_update(c1, a, std::vector<std::size_t>{b, c}, negs, 0.5);
  cconcat_update(c2, a, std::vector<std::size_t>{c, b}, negs, 0.5);
  cbow_update(b1, a, std::vector<std::size_t>{b, c}, negs, 0.5);
  cbow_update(b2, a, std::vector<std::size_t>{c, b}, negs, 0.5);
  const auto probe = std::vector<std::size_t>{b, c};
  CHECK(cconcat_loss(c1, a, probe, negs, nullptr) != cconcat_loss(c2, a, probe, negs, nullptr));
  CHECK(cbow_loss(b1, a, probe, negs, nullptr) == doctest::Approx(cbow_loss(b2, a, probe, negs, nullptr)).epsilon(1e-15));
}

TEST_CASE("alternating corpus learns the neighbour") {
  std::vector<std::vector<std::string>> corpus;
  std::vector<std::string> line;
  for (int i = 0; i < 10000; ++i) {
    line.push_back(i % 2 ? "b" : "a");
    if (line.size() == 20) corpus.push_back(std::exchange(line, {}));
  }
  EmbedConfig c;
  c.dim = 4;
  c.window = 1;
  c.subsample = 0.0;
  c.negatives = 2;
  c.epochs = 3;
  c.min_count = 1;
  const EmbedModel m = train_embeddings(corpus, EmbedObjective::kCbow, c);
  const std::size_t a = m.vocab.index("a"), b = m.vocab.index("b");
  // Contexts of b are all "a", so h(a-context) = v_a.
  CHECK(sigmoid(dot(m.output.row(b), m.input.row(a))) > 0.9);
}

TEST_CASE("two-class corpus clusters for every objective") {
  const std::vector<std::string> animals{"cat", "dog", "cow", "pig"};
  const std::vector<std::string> colours{"red", "blue", "green", "pink"};
  Rng rng(11);
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 3000; ++i) {
    if (rng.uniform() < 0.5) {
      corpus.push_back({"the", animals[rng.uniform_int(4)], "eats", "grass", "daily"});
    } else {
      corpus.push_back({"a", colours[rng.uniform_int(4)], "paint", "is", "bright"});
    }
  }
  EmbedConfig c;
  c.dim = 10;
  c.window = 2;
  c.subsample = 0.0;
  c.negatives = 5;
  c.epochs = 3;
  c.min_count = 1;
  for (auto obj : {EmbedObjective::kCbow, EmbedObjective::kSkipGram, EmbedObjective::kCConcat}) {
    const EmbedModel m = train_embeddings(corpus, obj, c);
    double within = 0, cross = 0;
    int nw = 0, nc = 0;
    const auto row = [&](const std::string& w) { return m.input.row(m.vocab.index(w)); };
    for (const auto* cls : {&animals, &colours}) {
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j, ++nw) within += cosine(row((*cls)[i]), row((*cls)[j]));
    }
    for (const auto& x : animals)
      for (const auto& y : colours) {
        cross += cosine(row(x), row(y));
        ++nc;
      }
    INFO(objective_name(obj), " within=", within / nw, " cross=", cross / nc);
    CHECK(within / nw > cross / nc);
  }
}

TEST_CASE("training is deterministic and files round-trip") {
  testutil::TempDir dir("embed");
  std::vector<std::vector<std::string>> corpus{{"x", "y", "z", "x"}, {"y", "z", "x", "y"}};
  EmbedConfig c;
  c.dim = 3;
  c.window = 2;
  c.epochs = 2;
  c.min_count = 1;
  c.negatives = 2;
  const EmbedModel m1 = train_embeddings(corpus, EmbedObjective::kSkipGram, c);
  const EmbedModel m2 = train_embeddings(corpus, EmbedObjective::kSkipGram, c);
  CHECK(m1.input == m2.input);
  save_text(m1, dir / "v.txt");
  save_text(m2, dir / "w.txt");
  CHECK(testutil::read_file(dir / "v.txt") == testutil::read_file(dir / "w.txt"));
  const WordVectors back = load_text(dir / "v.txt");
  CHECK(back.vectors == export_vectors(m1).vectors);
  CHECK(back.words == export_vectors(m1).words);

  c.epochs = 0;
  const EmbedModel init = train_embeddings(corpus, EmbedObjective::kCbow, c);
  for (double x : init.input.span()) CHECK(std::abs(x) <= 0.5 / 3);
  for (double x : init.output.span()) CHECK(x == 0.0);
}

TEST_CASE("empty corpus after filtering is an error") {
  EmbedConfig c;
  c.min_count = 5;
  CHECK_THROWS_AS(train_embeddings({{"rare", "words"}}, EmbedObjective::kCbow, c), DataError);
  CHECK_THROWS_AS(train_embeddings({}, EmbedObjective::kCbow, c), DataError);
  c.dim = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("objective names and defaults") {
  CHECK(parse_objective("skipgram") == EmbedObjective::kSkipGram);
  CHECK(parse_objective("cconcat") == EmbedObjective::kCConcat);
  CHECK_THROWS(parse_objective("glove"));
  const EmbedConfig d;
  CHECK(d.dim == 300);
  CHECK(d.window == 5);
  CHECK(d.negatives == 10);
  CHECK(d.subsample == 1e-5);
}
