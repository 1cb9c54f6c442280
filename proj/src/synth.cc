#include "mdrnn/synth.h"

#include <array>
#include <span>
#include <string>

#include "mdrnn/errors.h"
#include "mdrnn/rng.h"

namespace mdrnn::synth {
namespace {

constexpr std::array<std::string_view, 12> kFillers = {
    "the", "a", "of", "was", "in", "on", "with", "to", "and", "for", "today", "there"};

struct Pool {
  std::string_view type;
  std::vector<std::vector<std::string_view>> names;
};

const std::array<Pool, 3>& pools() {
  static const std::array<Pool, 3> p = {{
      {"PER", {{"alice"}, {"bruno"}, {"chen", "wei"}, {"dmitri"}, {"elena", "ruiz"}, {"farid"}}},
      {"LOC", {{"paris"}, {"lagos"}, {"new", "delhi"}, {"quito"}, {"oslo"}, {"rio", "grande"}}},
      {"ORG", {{"acme"}, {"globex"}, {"red", "cross"}, {"initech"}, {"umbrella", "corp"}, {"nato"}}},
  }};
  return p;
}

constexpr std::array<std::string_view, 10> kAmbiguous = {
    "jordan", "morgan", "ford", "dell", "wendy", "casey", "tesla", "hermes", "gucci", "boeing"};

void push(Sentence& s, std::string_view word, std::string tag) {
  s.tokens.push_back(Token{std::string(word), std::move(tag)});
}

std::string_view pick(std::span<const std::string_view> words, Rng& rng) {
  return words[rng.uniform_int(words.size())];
}

}  // namespace

Task parse_task(std::string_view name) {
  if (name == "memorize") return Task::kMemorize;
  if (name == "future-dep" || name == "future_dep") return Task::kFutureDep;
  throw ConfigError("unknown synth task '" + std::string(name) +
                    "' (expected memorize, future-dep)");
}

std::string_view task_name(Task task) {
  return task == Task::kMemorize ? "memorize" : "future-dep";
}

std::vector<Sentence> memorize(std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sentence> out;
  out.reserve(size);
  for (std::size_t n = 0; n < size; ++n) {
    Sentence s;
    s.doc_id = std::to_string(n);
    const std::size_t mentions = 1 + rng.uniform_int(2);
    for (std::size_t m = 0; m < mentions; ++m) {
      const std::size_t fill = 1 + rng.uniform_int(3);
      for (std::size_t f = 0; f < fill; ++f) push(s, pick(kFillers, rng), "O");
      const Pool& pool = pools()[rng.uniform_int(pools().size())];
      const auto& name = pool.names[rng.uniform_int(pool.names.size())];
      for (std::size_t t = 0; t < name.size(); ++t) {
        push(s, name[t], (t == 0 ? "B-" : "I-") + std::string(pool.type));
      }
    }
    if (rng.uniform_int(2) == 1) push(s, pick(kFillers, rng), "O");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> future_dependency(std::size_t size, std::uint64_t seed,
                                        std::size_t min_fillers) {
  Rng rng(seed);
  std::vector<Sentence> out;
  out.reserve(size);
  while (out.size() < size) {
    Sentence base;
    push(base, pick(kAmbiguous, rng), "");
    const std::size_t fill = min_fillers + rng.uniform_int(3);
    for (std::size_t f = 0; f < fill; ++f) push(base, pick(kFillers, rng), "O");
    for (int cls = 0; cls < 2 && out.size() < size; ++cls) {
      Sentence s = base;
      s.doc_id = std::to_string(out.size());
      s.tokens[0].gold_tag = cls == 0 ? "B-ORG" : "B-PER";
      push(s, cls == 0 ? kOrgCue : kPerCue, "O");
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<Sentence> generate(Task task, std::size_t size, std::uint64_t seed) {
  return task == Task::kMemorize ? memorize(size, seed) : future_dependency(size, seed);
}

}  // namespace mdrnn::synth
