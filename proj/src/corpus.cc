#include "mdrnn/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mdrnn/errors.h"

namespace mdrnn {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<std::size_t> resolve_column(int col, std::size_t nfields) {
  if (col >= 0) {
    if (static_cast<std::size_t>(col) < nfields) return static_cast<std::size_t>(col);
    return std::nullopt;
  }
  const auto back = static_cast<std::size_t>(-col);
  if (back <= nfields) return nfields - back;
  return std::nullopt;
}

}  // namespace

std::vector<Sentence> parse_conll(std::string_view text,
                                  const ConllOptions& options) {
  std::vector<Sentence> out;
  Sentence current;
  std::size_t doc = 0;
  bool doc_has_content = false;
  auto flush = [&] {
    if (!current.tokens.empty()) {
      current.doc_id = std::to_string(doc);
      out.push_back(std::move(current));
      current = Sentence{};
      doc_has_content = true;
    }
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto fields = split_ws(line);
    if (fields.empty()) {
      flush();
      if (eol == text.size()) break;
      continue;
    }
    if (!options.doc_separator.empty() && fields[0] == options.doc_separator) {
      flush();
      if (doc_has_content) ++doc;
      doc_has_content = false;
      if (eol == text.size()) break;
      continue;
    }
    const auto tok_col = resolve_column(options.token_column, fields.size());
    std::optional<std::size_t> tag_col;
    if (options.tag_column) {
      tag_col = resolve_column(*options.tag_column, fields.size());
    }
    if (!tok_col || (options.tag_column && !tag_col)) {
      throw DataError("line " + std::to_string(line_no) + ": expected column " +
                      std::to_string(options.tag_column ? std::max(options.token_column,
                                                                   *options.tag_column)
                                                        : options.token_column) +
                      " but found " + std::to_string(fields.size()) + " fields");
    }
    Token tok;
    tok.surface = std::string(fields[*tok_col]);
    if (tag_col) tok.gold_tag = std::string(fields[*tag_col]);
    current.tokens.push_back(std::move(tok));
    if (eol == text.size()) break;
  }
  flush();
  return out;
}

std::vector<Sentence> load_conll(const std::filesystem::path& path,
                                 const ConllOptions& options) {
  return parse_conll(read_file(path), options);
}

std::string format_conll(
    const std::vector<Sentence>& sentences,
    const std::vector<std::vector<std::string>>* extra_columns) {
  std::string out;
  std::string last_doc;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& sent = sentences[s];
    if (s > 0 && sent.doc_id != last_doc) out += "-DOCSTART-\n\n";
    last_doc = sent.doc_id;
    for (std::size_t t = 0; t < sent.tokens.size(); ++t) {
      out += sent.tokens[t].surface;
      if (sent.tokens[t].gold_tag) {
        out += ' ';
        out += *sent.tokens[t].gold_tag;
      }
      if (extra_columns) {
        out += ' ';
        out += (*extra_columns)[s][t];
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void write_conll(const std::filesystem::path& path,
                 const std::vector<Sentence>& sentences,
                 const std::vector<std::vector<std::string>>* extra_columns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << format_conll(sentences, extra_columns);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string Normalization::apply(std::string_view word) const {
  std::string out(word);
  for (auto& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (lowercase) c = static_cast<char>(std::tolower(u));
    if (digits_to_zero && std::isdigit(u)) c = '0';
  }
  return out;
}

Vocabulary::Vocabulary(Normalization norm) : norm_(norm) {
  add(std::string(kUnkWord));
  add(std::string(kPadWord));
}

std::size_t Vocabulary::add(std::string key, std::size_t count) {
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const std::size_t idx = words_.size();
  index_.emplace(key, idx);
  words_.push_back(std::move(key));
  counts_.push_back(count);
  return idx;
}

std::size_t Vocabulary::index_normalized(std::string_view key) const {
  auto it = index_.find(std::string(key));
  return it == index_.end() ? kUnk : it->second;
}

std::size_t Vocabulary::index(std::string_view word) const {
  return index_normalized(norm_.apply(word));
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.count(norm_.apply(word)) > 0;
}

Vocabulary build_vocab_from_counts(const std::map<std::string, std::size_t>& counts,
                                   std::size_t min_count, Normalization norm) {
  if (min_count == 0) min_count = 1;
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [w, c] : counts) {
    if (c >= min_count && w != Vocabulary::kUnkWord && w != Vocabulary::kPadWord) {
      kept.emplace_back(w, c);
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab(norm);
  for (auto& [w, c] : kept) vocab.add(w, c);
  return vocab;
}

Vocabulary build_vocab(const std::vector<Sentence>& sentences,
                       std::size_t min_count, Normalization norm) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) ++counts[norm.apply(t.surface)];
  }
  return build_vocab_from_counts(counts, min_count, norm);
}

void Lexicon::add(std::string_view phrase) {
  const auto fields = split_ws(phrase);
  if (fields.empty()) return;
  std::string key;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) key += ' ';
    key += to_lower_ascii(fields[i]);
  }
  entries_.insert(std::move(key));
  max_tokens_ = std::max(max_tokens_, fields.size());
}

bool Lexicon::contains(std::string_view phrase) const {
  return entries_.count(to_lower_ascii(phrase)) > 0;
}

bool Lexicon::contains_tokens(const std::vector<Token>& tokens, std::size_t begin,
                              std::size_t len) const {
  if (len == 0 || begin + len > tokens.size() || len > max_tokens_) return false;
  std::string key;
  for (std::size_t i = 0; i < len; ++i) {
    if (i) key += ' ';
    key += to_lower_ascii(tokens[begin + i].surface);
  }
  return entries_.count(key) > 0;
}

std::vector<std::string> Lexicon::sorted_entries() const {
  std::vector<std::string> out(entries_.begin(), entries_.end());
  std::sort(out.begin(), out.end());
  return out;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  Lexicon lex(path.stem().string());
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lex.add(line);
  return lex;
}

}  // namespace mdrnn
