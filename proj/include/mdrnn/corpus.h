#ifndef MDRNN_CORPUS_H_
#define MDRNN_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace mdrnn {

struct Token {
  std::string surface;
  std::optional<std::string> gold_tag;
};

struct Sentence {
  std::vector<Token> tokens;
  std::string doc_id;

  std::size_t size() const { return tokens.size(); }
};

struct ConllOptions {
  // Column indices; negative values count from the end of the line (-1 is
  // the last column). tag_column unset means the file carries no tags.
  int token_column = 0;
  std::optional<int> tag_column = -1;
  // A line whose first field equals this string starts a new document.
  std::string doc_separator = "-DOCSTART-";
};

std::vector<Sentence> load_conll(const std::filesystem::path& path,
                                 const ConllOptions& options = {});
std::vector<Sentence> parse_conll(std::string_view text,
                                  const ConllOptions& options = {});

// Writes "surface [gold] [extra...]" per token; extra_columns[s][t] are
// appended after the gold tag when given.
std::string format_conll(
    const std::vector<Sentence>& sentences,
    const std::vector<std::vector<std::string>>* extra_columns = nullptr);
void write_conll(const std::filesystem::path& path,
                 const std::vector<Sentence>& sentences,
                 const std::vector<std::vector<std::string>>* extra_columns =
                     nullptr);

// Surface-form normalization applied before any vocabulary lookup.
struct Normalization {
  bool lowercase = true;
  bool digits_to_zero = true;

  std::string apply(std::string_view word) const;
};

std::string to_lower_ascii(std::string_view s);

class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kPad = 1;
  static constexpr std::string_view kUnkWord = "<UNK>";
  static constexpr std::string_view kPadWord = "<PAD>";

  explicit Vocabulary(Normalization norm = {});

  // Index of the normalized form of `word`; unknown words map to kUnk.
  std::size_t index(std::string_view word) const;
  // Looks up an already-normalized key.
  std::size_t index_normalized(std::string_view key) const;
  bool contains(std::string_view word) const;
  const std::string& word(std::size_t index) const { return words_.at(index); }
  std::size_t count(std::size_t index) const { return counts_.at(index); }
  std::size_t size() const { return words_.size(); }

  // Adds a normalized key (no-op if present). Returns its index.
  std::size_t add(std::string key, std::size_t count = 0);

  const Normalization& normalization() const { return norm_; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::size_t>& counts() const { return counts_; }

 private:
  Normalization norm_;
  std::vector<std::string> words_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Vocabulary of normalized forms with frequency >= min_count. Order: UNK,
// PAD, then frequency descending with lexicographic tie-break.
Vocabulary build_vocab(const std::vector<Sentence>& sentences,
                       std::size_t min_count, Normalization norm = {});
Vocabulary build_vocab_from_counts(const std::map<std::string, std::size_t>& counts,
                                   std::size_t min_count, Normalization norm);

// Case-insensitive phrase list (gazetteer or trigger words).
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::string name) : name_(std::move(name)) {}

  // Lowercases and collapses internal whitespace. Empty phrases are ignored.
  void add(std::string_view phrase);
  bool contains(std::string_view phrase) const;
  // True if tokens[begin, begin+len) joined by single spaces is an entry.
  bool contains_tokens(const std::vector<Token>& tokens, std::size_t begin,
                       std::size_t len) const;

  const std::string& name() const { return name_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_phrase_tokens() const { return max_tokens_; }
  std::vector<std::string> sorted_entries() const;

 private:
  std::string name_;
  std::unordered_set<std::string> entries_;
  std::size_t max_tokens_ = 0;
};

Lexicon load_lexicon(const std::filesystem::path& path);

}  // namespace mdrnn

#endif  // MDRNN_CORPUS_H_
