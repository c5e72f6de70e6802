#include "vens/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace vens {

int LabelIndex::add_or_lookup(const std::string& label) {
  auto it = ids_.find(label);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(names_.size());
  names_.push_back(label);
  ids_.emplace(label, id);
  return id;
}

int LabelIndex::lookup(const std::string& label) const {
  auto it = ids_.find(label);
  if (it == ids_.end()) throw LabelError("unknown label \"" + label + "\"");
  return it->second;
}

const std::string& LabelIndex::name(int id) const {
  if (id < 0 || id >= size()) {
    throw IndexError("label id " + std::to_string(id) + " out of range");
  }
  return names_[static_cast<std::size_t>(id)];
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw VocabularyError("token id " + std::to_string(id) + " out of vocabulary");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

PseudoTagSet Vocabulary::pseudo_tags() const {
  return PseudoTagSet{num_pseudo_tags(), pseudo_tag_ids_};
}

EmbeddingLayout Vocabulary::layout() const {
  EmbeddingLayout l;
  l.vocab_size = size();
  l.generic_tag_id = generic_tag_id_;
  l.first_pseudo_tag_id = pseudo_tag_ids_.empty() ? -1 : pseudo_tag_ids_.front();
  l.num_pseudo_tags = num_pseudo_tags();
  l.first_content_id = 2;
  return l;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpora, int min_freq,
                       int num_pseudo_tags) {
  if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be at least 1");
  if (num_pseudo_tags < 0) throw ConfigError("build_vocab: negative pseudo-tag count");

  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& doc : corpora) {
    for (const auto& tok : doc) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::int64_t>> kept;
  kept.reserve(freq.size());
  for (auto& [tok, n] : freq) {
    if (n >= min_freq) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.id_to_token_.push_back(Vocabulary::kPadToken);
  v.id_to_token_.push_back(Vocabulary::kUnkToken);
  for (auto& [tok, n] : kept) v.id_to_token_.push_back(tok);
  v.generic_tag_id_ = static_cast<int>(v.id_to_token_.size());
  v.id_to_token_.push_back(Vocabulary::kGenericTagToken);
  for (int k = 1; k <= num_pseudo_tags; ++k) {
    v.pseudo_tag_ids_.push_back(static_cast<int>(v.id_to_token_.size()));
    v.id_to_token_.push_back("<tag-" + std::to_string(k) + ">");
  }
  for (int id = 0; id < v.size(); ++id) {
    v.token_to_id_.emplace(v.id_to_token_[static_cast<std::size_t>(id)], id);
  }
  return v;
}

Vocabulary vocab_from_tokens(std::vector<std::string> id_to_token, int generic_tag_id,
                             int num_pseudo_tags) {
  Vocabulary v;
  v.id_to_token_ = std::move(id_to_token);
  v.generic_tag_id_ = generic_tag_id;
  for (int k = 0; k < num_pseudo_tags; ++k) {
    v.pseudo_tag_ids_.push_back(generic_tag_id + 1 + k);
  }
  for (int id = 0; id < v.size(); ++id) {
    v.token_to_id_.emplace(v.id_to_token_[static_cast<std::size_t>(id)], id);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_whitespace(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

}  // namespace

std::vector<ClassificationExample> parse_classification_tsv(std::istream& in,
                                                            LabelIndex& labels,
                                                            bool allow_new_labels) {
  std::vector<ClassificationExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected label<TAB>text");
    }
    const std::string label = line.substr(0, tab);
    ClassificationExample ex;
    ex.tokens = split_whitespace(line.substr(tab + 1));
    if (ex.tokens.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty text");
    }
    ex.label = allow_new_labels ? labels.add_or_lookup(label) : labels.lookup(label);
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

bool iob_continues(const std::string& prev, const std::string& cur) {
  // cur is I-X; valid when prev is B-X or I-X with the same X.
  if (prev.size() < 2 || (prev[0] != 'B' && prev[0] != 'I')) return false;
  return prev.substr(1) == cur.substr(1);
}

int repair_iob(std::vector<std::string>& labels) {
  int repairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& l = labels[i];
    if (l.size() >= 2 && l[0] == 'I' && l[1] == '-') {
      const bool ok = i > 0 && iob_continues(labels[i - 1], l);
      if (!ok) {
        l[0] = 'B';
        ++repairs;
      }
    }
  }
  return repairs;
}

}  // namespace

ConllParseResult parse_conll(std::istream& in, int token_col, int label_col) {
  if (token_col < 0 || label_col < 0) {
    throw ConfigError("parse_conll: column indices must be non-negative");
  }
  ConllParseResult result;
  TaggedSentence current;
  bool skip_sentence = false;
  int expected_cols = -1;
  std::string line;
  std::size_t line_no = 0;

  auto flush = [&]() {
    if (!current.tokens.empty() && !skip_sentence) {
      result.iob_repairs += repair_iob(current.labels);
      result.sentences.push_back(std::move(current));
    }
    current = TaggedSentence{};
    skip_sentence = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) {
      flush();
      continue;
    }
    auto cols = split_whitespace(line);
    if (cols.front() == "-DOCSTART-") {
      skip_sentence = true;
      continue;
    }
    if (expected_cols < 0) {
      expected_cols = static_cast<int>(cols.size());
      if (token_col >= expected_cols || label_col >= expected_cols) {
        throw ParseError("line " + std::to_string(line_no) + ": requested columns " +
                         std::to_string(token_col) + "/" + std::to_string(label_col) +
                         " but file has " + std::to_string(expected_cols));
      }
    }
    if (static_cast<int>(cols.size()) != expected_cols) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(expected_cols) + " columns, got " +
                       std::to_string(cols.size()));
    }
    current.tokens.push_back(cols[static_cast<std::size_t>(token_col)]);
    current.labels.push_back(cols[static_cast<std::size_t>(label_col)]);
  }
  flush();
  return result;
}

void write_classification_tsv(const std::vector<ClassificationExample>& examples,
                              const LabelIndex& labels, std::ostream& os) {
  for (const auto& ex : examples) {
    os << labels.name(ex.label) << '\t';
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i) os << ' ';
      os << ex.tokens[i];
    }
    os << '\n';
  }
}

void write_conll(const std::vector<TaggedSentence>& sentences, std::ostream& os) {
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      os << s.tokens[i] << ' ' << s.labels[i] << '\n';
    }
    os << '\n';
  }
}

void dump_jsonl(const std::vector<ClassificationExample>& examples,
                const LabelIndex& labels, std::ostream& os) {
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["tokens"] = ex.tokens;
    j["label"] = labels.name(ex.label);
    os << j.dump() << '\n';
  }
}

void dump_jsonl(const std::vector<TaggedSentence>& sentences, std::ostream& os) {
  for (const auto& s : sentences) {
    nlohmann::ordered_json j;
    j["tokens"] = s.tokens;
    j["labels"] = s.labels;
    os << j.dump() << '\n';
  }
}

void lowercase_inplace(std::vector<std::string>& tokens) {
  for (auto& t : tokens) {
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
}

// ---------------------------------------------------------------------------
// Inflation
// ---------------------------------------------------------------------------

InflatedDataset inflate(std::size_t base_size, int K, Sampling sampling, Rng rng) {
  if (K < 1) throw ConfigError("inflate: K must be positive");
  if (base_size == 0) throw ConfigError("inflate: empty training set");

  InflatedDataset out;
  out.sampling = sampling;
  out.base_size = base_size;
  out.K = K;
  out.items.reserve(base_size * static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) {
    for (std::size_t i = 0; i < base_size; ++i) {
      const std::size_t idx =
          sampling == Sampling::bootstrap ? rng.uniform_index(base_size) : i;
      out.items.push_back(TaggedExample{idx, k});
    }
  }
  return out;
}

}  // namespace vens
