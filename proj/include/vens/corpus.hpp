#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vens/encoder.hpp"
#include "vens/ensemble.hpp"
#include "vens/rng.hpp"

namespace vens {

struct ClassificationExample {
  std::vector<std::string> tokens;
  int label = -1;
};

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;  // IOB scheme: O, B-X, I-X
};

/// Stable string-label index. Training parses add labels on first sight;
/// evaluation parses must find them or fail.
class LabelIndex {
 public:
  int add_or_lookup(const std::string& label);
  int lookup(const std::string& label) const;  // throws LabelError when unknown
  const std::string& name(int id) const;
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
};

/// Token ids, dense: PAD, UNK, content (frequency desc then lexicographic),
/// the generic tag, then the K pseudo-tags.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";
  static constexpr const char* kGenericTagToken = "<cls>";

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int generic_tag_id() const { return generic_tag_id_; }
  int num_pseudo_tags() const { return static_cast<int>(pseudo_tag_ids_.size()); }
  const std::vector<int>& pseudo_tag_ids() const { return pseudo_tag_ids_; }

  /// Content id or UNK.
  int id_of(const std::string& token) const;
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  const std::string& token_of(int id) const;

  PseudoTagSet pseudo_tags() const;
  EmbeddingLayout layout() const;

  friend Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpora,
                                int min_freq, int num_pseudo_tags);
  friend Vocabulary vocab_from_tokens(std::vector<std::string> id_to_token,
                                      int generic_tag_id, int num_pseudo_tags);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  int generic_tag_id_ = -1;
  std::vector<int> pseudo_tag_ids_;
};

/// Count content tokens across token sequences and lay out the vocabulary.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpora, int min_freq,
                       int num_pseudo_tags);

/// Rebuild a vocabulary from its serialized token list.
Vocabulary vocab_from_tokens(std::vector<std::string> id_to_token, int generic_tag_id,
                             int num_pseudo_tags);

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// "label<TAB>text" per line, text whitespace-tokenized; the first tab
/// splits. `allow_new_labels` is true for training data.
std::vector<ClassificationExample> parse_classification_tsv(std::istream& in,
                                                            LabelIndex& labels,
                                                            bool allow_new_labels);

struct ConllParseResult {
  std::vector<TaggedSentence> sentences;
  int iob_repairs = 0;  // stray I-X relabeled to B-X
};

/// Whitespace-separated columns, blank lines between sentences (runs of
/// blanks collapse), -DOCSTART- sentences skipped. IOB violations are
/// repaired and counted rather than rejected.
ConllParseResult parse_conll(std::istream& in, int token_col, int label_col);

void write_classification_tsv(const std::vector<ClassificationExample>& examples,
                              const LabelIndex& labels, std::ostream& os);
void write_conll(const std::vector<TaggedSentence>& sentences, std::ostream& os);

/// Canonical JSON-lines dump for debugging, one example per line.
void dump_jsonl(const std::vector<ClassificationExample>& examples,
                const LabelIndex& labels, std::ostream& os);
void dump_jsonl(const std::vector<TaggedSentence>& sentences, std::ostream& os);

void lowercase_inplace(std::vector<std::string>& tokens);

// ---------------------------------------------------------------------------
// Inflation
// ---------------------------------------------------------------------------

/// Base example index paired with its virtual-model assignment.
struct TaggedExample {
  std::size_t base_index = 0;
  int k = 1;
};

enum class Sampling { bootstrap, full_copy };

struct InflatedDataset {
  std::vector<TaggedExample> items;  // size == K * base_size
  Sampling sampling = Sampling::full_copy;
  std::size_t base_size = 0;
  int K = 1;
};

/// K-fold inflation over example indices. Bootstrap draws base_size samples
/// with replacement per k; full_copy assigns every original once per k.
InflatedDataset inflate(std::size_t base_size, int K, Sampling sampling, Rng rng);

}  // namespace vens
