#ifndef MDRNN_TAGGING_H_
#define MDRNN_TAGGING_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mdrnn/corpus.h"

namespace mdrnn {

enum class TagScheme { kBio2, kIobes };

TagScheme parse_scheme(std::string_view name);
std::string_view scheme_name(TagScheme scheme);

struct Span {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // inclusive
  std::string type;

  auto operator<=>(const Span&) const = default;
};

// Tag inventory for a scheme and a set of entity types. Index 0 is "O";
// the rest are ordered by type, then by prefix, both lexicographically.
class TagSet {
 public:
  TagSet() = default;
  TagSet(TagScheme scheme, std::vector<std::string> types);

  // Collects entity types from gold tags in `sentences` (read under `scheme`).
  static TagSet from_corpus(const std::vector<Sentence>& sentences,
                            TagScheme scheme);

  std::size_t size() const { return tags_.size(); }
  const std::string& tag(std::size_t i) const { return tags_.at(i); }
  // Throws DataError for tags outside the set.
  std::size_t index(std::string_view tag) const;
  bool contains(std::string_view tag) const;
  TagScheme scheme() const { return scheme_; }
  const std::vector<std::string>& types() const { return types_; }
  const std::vector<std::string>& tags() const { return tags_; }

 private:
  TagScheme scheme_ = TagScheme::kBio2;
  std::vector<std::string> types_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::string> spans_to_tags(const std::vector<Span>& spans,
                                       std::size_t n, TagScheme scheme);

// Decodes possibly ill-formed tag sequences with conlleval chunk semantics.
// Throws DataError on tags whose prefix is not part of `scheme`.
std::vector<Span> tags_to_spans(const std::vector<std::string>& tags,
                                TagScheme scheme);

std::vector<std::string> convert_scheme(const std::vector<std::string>& tags,
                                        TagScheme from, TagScheme to);

// Gold tags of a sentence; throws DataError if any token lacks a tag.
std::vector<std::string> gold_tags(const Sentence& sentence);

}  // namespace mdrnn

#endif  // MDRNN_TAGGING_H_
