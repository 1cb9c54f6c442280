#include <doctest.h>

#include <string>
#include <vector>

#include "mdrnn/errors.h"
#include "mdrnn/rng.h"
#include "mdrnn/tagging.h"

using namespace mdrnn;

namespace {

using Tags = std::vector<std::string>;

// Straight transcription of the conlleval chunk rules, extended with S and E.
struct Oracle {
  static void split(const std::string& tag, char& prefix, std::string& type) {
    if (tag == "O") {
      prefix = 'O';
      type.clear();
      return;
    }
    prefix = tag[0];
    type = tag.substr(2);
  }
  static bool end_of_chunk(char pt, char t, const std::string& ptype,
                           const std::string& type) {
    bool end = false;
    if (pt == 'E' || pt == 'S') end = true;
    if (pt == 'B' && (t == 'B' || t == 'S' || t == 'O')) end = true;
    if (pt == 'I' && (t == 'B' || t == 'S' || t == 'O')) end = true;
    if (pt != 'O' && ptype != type) end = true;
    return end;
  }
  static bool start_of_chunk(char pt, char t, const std::string& ptype,
                             const std::string& type) {
    bool start = false;
    if (t == 'B' || t == 'S') start = true;
    if ((pt == 'E' || pt == 'S' || pt == 'O') && (t == 'E' || t == 'I')) start = true;
    if (t != 'O' && ptype != type) start = true;
    return start;
  }
  static std::vector<Span> spans(const Tags& tags) {
    std::vector<Span> out;
    char pt = 'O';
    std::string ptype;
    std::optional<std::size_t> begin;
    std::string btype;
    for (std::size_t i = 0; i <= tags.size(); ++i) {
      char t = 'O';
      std::string type;
      if (i < tags.size()) split(tags[i], t, type);
      if (begin && end_of_chunk(pt, t, ptype, type)) {
        out.push_back(Span{*begin, i - 1, btype});
        begin.reset();
      }
      if (i < tags.size() && start_of_chunk(pt, t, ptype, type)) {
        begin = i;
        btype = type;
      }
      pt = t;
      ptype = type;
    }
    return out;
  }
};

std::vector<Span> random_spans(Rng& rng, std::size_t n) {
  const char* types[] = {"PER", "LOC", "ORG"};
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < n) {
    if (rng.uniform() < 0.4) {
      const std::size_t len = 1 + rng.uniform_int(std::min<std::size_t>(4, n - i));
      spans.push_back(Span{i, i + len - 1, types[rng.uniform_int(3)]});
      i += len;
    } else {
      ++i;
    }
  }
  return spans;
}

}  // namespace

TEST_CASE("spans_to_tags examples") {
  CHECK(spans_to_tags({{0, 1, "PER"}}, 4, TagScheme::kBio2) ==
        Tags{"B-PER", "I-PER", "O", "O"});
  CHECK(spans_to_tags({{2, 2, "ORG"}}, 3, TagScheme::kIobes) == Tags{"O", "O", "S-ORG"});
  CHECK(spans_to_tags({{0, 0, "PER"}, {1, 2, "ORG"}}, 3, TagScheme::kIobes) ==
        Tags{"S-PER", "B-ORG", "E-ORG"});
  CHECK(spans_to_tags({{0, 3, "LOC"}}, 4, TagScheme::kIobes) ==
        Tags{"B-LOC", "I-LOC", "I-LOC", "E-LOC"});
}

TEST_CASE("overlapping spans are rejected with both spans named") {
  try {
    spans_to_tags({{0, 2, "PER"}, {2, 3, "ORG"}}, 5, TagScheme::kBio2);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("0,2,PER") != std::string::npos);
    CHECK(msg.find("2,3,ORG") != std::string::npos);
  }
  CHECK_THROWS_AS(spans_to_tags({{1, 4, "PER"}}, 3, TagScheme::kBio2), DataError);
}

TEST_CASE("tags_to_spans examples and repairs") {
  CHECK(tags_to_spans({"B-PER", "I-PER", "O", "B-ORG"}, TagScheme::kBio2) ==
        std::vector<Span>{{0, 1, "PER"}, {3, 3, "ORG"}});
  CHECK(tags_to_spans({"O", "I-PER"}, TagScheme::kBio2) == std::vector<Span>{{1, 1, "PER"}});
  const Tags mixed{"B-PER", "I-ORG"};
  CHECK(tags_to_spans(mixed, TagScheme::kBio2) == Oracle::spans(mixed));
  CHECK(tags_to_spans(mixed, TagScheme::kBio2) ==
        std::vector<Span>{{0, 0, "PER"}, {1, 1, "ORG"}});
  // Unterminated IOBES span closes at its last compatible token.
  CHECK(tags_to_spans({"B-LOC", "I-LOC", "O"}, TagScheme::kIobes) ==
        std::vector<Span>{{0, 1, "LOC"}});
  CHECK_THROWS_AS(tags_to_spans({"X-PER"}, TagScheme::kBio2), DataError);
  CHECK_THROWS_AS(tags_to_spans({"S-PER"}, TagScheme::kBio2), DataError);
}

TEST_CASE("round trip on random span sets, both schemes") {
  Rng rng(2024);
  for (auto scheme : {TagScheme::kBio2, TagScheme::kIobes}) {
    for (int t = 0; t < 2000; ++t) {
      const std::size_t n = 1 + rng.uniform_int(15);
      const auto spans = random_spans(rng, n);
      REQUIRE(tags_to_spans(spans_to_tags(spans, n, scheme), scheme) == spans);
    }
  }
}

TEST_CASE("decoder is total and agrees with the conlleval oracle") {
  Rng rng(77);
  const Tags bio{"O", "B-PER", "I-PER", "B-LOC", "I-LOC"};
  const Tags iobes{"O", "B-PER", "I-PER", "E-PER", "S-PER", "B-LOC", "I-LOC", "E-LOC", "S-LOC"};
  for (int t = 0; t < 3000; ++t) {
    const bool use_iobes = t % 2 == 1;
    const Tags& pool = use_iobes ? iobes : bio;
    Tags tags;
    const std::size_t n = 1 + rng.uniform_int(10);
    for (std::size_t i = 0; i < n; ++i) tags.push_back(pool[rng.uniform_int(pool.size())]);
    const auto got = tags_to_spans(tags, use_iobes ? TagScheme::kIobes : TagScheme::kBio2);
    REQUIRE(got == Oracle::spans(tags));
    for (const auto& s : got) {
      CHECK(s.start <= s.end);
      CHECK(s.end < n);
    }
  }
}

TEST_CASE("convert_scheme") {
  CHECK(convert_scheme({"B-PER", "I-PER"}, TagScheme::kBio2, TagScheme::kIobes) ==
        Tags{"B-PER", "E-PER"});
  CHECK(convert_scheme({"S-LOC"}, TagScheme::kIobes, TagScheme::kBio2) == Tags{"B-LOC"});
  for (auto from : {TagScheme::kBio2, TagScheme::kIobes}) {
    for (auto to : {TagScheme::kBio2, TagScheme::kIobes}) {
      CHECK(convert_scheme({"O", "O", "O"}, from, to) == Tags{"O", "O", "O"});
    }
  }
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng.uniform_int(10);
    const auto tags = spans_to_tags(random_spans(rng, n), n, TagScheme::kIobes);
    CHECK(convert_scheme(tags, TagScheme::kIobes, TagScheme::kIobes) == tags);
    const auto bio = convert_scheme(tags, TagScheme::kIobes, TagScheme::kBio2);
    CHECK(convert_scheme(bio, TagScheme::kBio2, TagScheme::kIobes) == tags);
  }
}

TEST_CASE("tag set order and closure") {
  const TagSet bio(TagScheme::kBio2, {"PER", "LOC"});
  CHECK(bio.tags() == Tags{"O", "B-LOC", "I-LOC", "B-PER", "I-PER"});
  const TagSet iobes(TagScheme::kIobes, {"ORG"});
  CHECK(iobes.tags() == Tags{"O", "B-ORG", "E-ORG", "I-ORG", "S-ORG"});
  CHECK(iobes.index("S-ORG") == 4);
  CHECK_THROWS_AS(iobes.index("B-PER"), DataError);
  CHECK(parse_scheme("iobes") == TagScheme::kIobes);
  CHECK_THROWS(parse_scheme("bilou"));

  const auto corpus = parse_conll("a B-PER\nb I-PER\nc O\n\nd B-GPE\n");
  const TagSet from = TagSet::from_corpus(corpus, TagScheme::kBio2);
  CHECK(from.types() == Tags{"GPE", "PER"});
  CHECK(from.size() == 5);
}
