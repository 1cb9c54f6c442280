#include "mdrnn/tagging.h"

#include <algorithm>
#include <set>

#include "mdrnn/errors.h"

namespace mdrnn {
namespace {

struct ParsedTag {
  char prefix;  // 'O', 'B', 'I', 'E', 'S'
  std::string_view type;
};

ParsedTag parse_tag(std::string_view tag, TagScheme scheme) {
  if (tag == "O") return {'O', {}};
  if (tag.size() < 3 || tag[1] != '-') {
    throw DataError("unknown tag '" + std::string(tag) + "'");
  }
  const char p = tag[0];
  const bool ok = p == 'B' || p == 'I' ||
                  (scheme == TagScheme::kIobes && (p == 'E' || p == 'S'));
  if (!ok) {
    throw DataError("tag '" + std::string(tag) + "' is not valid under " +
                    std::string(scheme_name(scheme)));
  }
  return {p, tag.substr(2)};
}

std::string_view prefixes(TagScheme scheme) {
  return scheme == TagScheme::kBio2 ? "BI" : "BEIS";
}

// conlleval endOfChunk
bool chunk_ends(char prev, char cur, std::string_view prev_type,
                std::string_view type) {
  if (prev == 'B' && (cur == 'B' || cur == 'S' || cur == 'O')) return true;
  if (prev == 'I' && (cur == 'B' || cur == 'S' || cur == 'O')) return true;
  if (prev == 'E' || prev == 'S') return true;
  return prev != 'O' && prev_type != type;
}

// conlleval startOfChunk
bool chunk_starts(char prev, char cur, std::string_view prev_type,
                  std::string_view type) {
  if (cur == 'B' || cur == 'S') return true;
  if ((prev == 'E' || prev == 'S' || prev == 'O') && (cur == 'E' || cur == 'I')) {
    return true;
  }
  return cur != 'O' && prev_type != type;
}

}  // namespace

TagScheme parse_scheme(std::string_view name) {
  std::string lower = to_lower_ascii(name);
  if (lower == "bio2" || lower == "iob2" || lower == "bio") return TagScheme::kBio2;
  if (lower == "iobes" || lower == "bioes") return TagScheme::kIobes;
  throw ConfigError("unknown tag scheme '" + std::string(name) + "'");
}

std::string_view scheme_name(TagScheme scheme) {
  return scheme == TagScheme::kBio2 ? "bio2" : "iobes";
}

TagSet::TagSet(TagScheme scheme, std::vector<std::string> types)
    : scheme_(scheme) {
  std::sort(types.begin(), types.end());
  types.erase(std::unique(types.begin(), types.end()), types.end());
  types_ = std::move(types);
  tags_.push_back("O");
  for (const auto& t : types_) {
    for (char p : prefixes(scheme)) tags_.push_back(std::string(1, p) + "-" + t);
  }
  for (std::size_t i = 0; i < tags_.size(); ++i) index_.emplace(tags_[i], i);
}

TagSet TagSet::from_corpus(const std::vector<Sentence>& sentences,
                           TagScheme scheme) {
  std::set<std::string> types;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      if (!t.gold_tag) continue;
      const auto parsed = parse_tag(*t.gold_tag, scheme);
      if (parsed.prefix != 'O') types.emplace(parsed.type);
    }
  }
  return TagSet(scheme, {types.begin(), types.end()});
}

std::size_t TagSet::index(std::string_view tag) const {
  auto it = index_.find(std::string(tag));
  if (it == index_.end()) throw DataError("unknown tag '" + std::string(tag) + "'");
  return it->second;
}

bool TagSet::contains(std::string_view tag) const {
  return index_.count(std::string(tag)) > 0;
}

std::vector<std::string> spans_to_tags(const std::vector<Span>& spans,
                                       std::size_t n, TagScheme scheme) {
  std::vector<std::string> tags(n, "O");
  std::vector<const Span*> owner(n, nullptr);
  for (const auto& span : spans) {
    if (span.start > span.end || span.end >= n || span.type.empty()) {
      throw DataError("span (" + std::to_string(span.start) + "," +
                      std::to_string(span.end) + "," + span.type +
                      ") out of bounds for length " + std::to_string(n));
    }
    for (std::size_t i = span.start; i <= span.end; ++i) {
      if (owner[i]) {
        const Span& o = *owner[i];
        throw DataError("overlapping spans (" + std::to_string(o.start) + "," +
                        std::to_string(o.end) + "," + o.type + ") and (" +
                        std::to_string(span.start) + "," + std::to_string(span.end) +
                        "," + span.type + ")");
      }
      owner[i] = &span;
    }
    for (std::size_t i = span.start; i <= span.end; ++i) {
      char p = i == span.start ? 'B' : 'I';
      if (scheme == TagScheme::kIobes) {
        if (span.start == span.end) {
          p = 'S';
        } else if (i == span.end) {
          p = 'E';
        }
      }
      tags[i] = std::string(1, p) + "-" + span.type;
    }
  }
  return tags;
}

std::vector<Span> tags_to_spans(const std::vector<std::string>& tags,
                                TagScheme scheme) {
  std::vector<Span> spans;
  char prev = 'O';
  std::string_view prev_type;
  bool open = false;
  Span current;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const ParsedTag cur = parse_tag(tags[i], scheme);
    if (open && chunk_ends(prev, cur.prefix, prev_type, cur.type)) {
      current.end = i - 1;
      spans.push_back(current);
      open = false;
    }
    if (chunk_starts(prev, cur.prefix, prev_type, cur.type)) {
      current = Span{i, i, std::string(cur.type)};
      open = true;
    }
    prev = cur.prefix;
    prev_type = cur.type;
  }
  if (open) {
    current.end = tags.size() - 1;
    spans.push_back(current);
  }
  return spans;
}

std::vector<std::string> convert_scheme(const std::vector<std::string>& tags,
                                        TagScheme from, TagScheme to) {
  return spans_to_tags(tags_to_spans(tags, from), tags.size(), to);
}

std::vector<std::string> gold_tags(const Sentence& sentence) {
  std::vector<std::string> out;
  out.reserve(sentence.size());
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const auto& t = sentence.tokens[i];
    if (!t.gold_tag) {
      throw DataError("token " + std::to_string(i) + " ('" + t.surface +
                      "') has no gold tag");
    }
    out.push_back(*t.gold_tag);
  }
  return out;
}

}  // namespace mdrnn
