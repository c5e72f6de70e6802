#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vens/optim.hpp"
#include "vens/rng.hpp"
#include "vens/tensor.hpp"

namespace vens {

struct EncoderConfig {
  int vocab_size = 0;  // filled from the vocabulary, pseudo-tag ids included
  int embed_dim = 64;  // hidden width equals embed width in this toolkit
  int num_layers = 2;
  int num_heads = 4;
  int ff_dim = 128;
  Real dropout_residual = 0.2;
  Real dropout_attention = 0.1;
  int max_seq_len = 128;

  void validate() const;
};

enum class HeadKind { classification, token_labeling };

struct TaskHead {
  HeadKind kind = HeadKind::classification;
  int num_classes = 2;
};

/// Which vocabulary rows are the generic tag and the pseudo-tag block.
/// Embedding rows for tag slots are seeded per slot (not sequentially), so
/// models that differ only in the number of pseudo-tags share every other
/// row's initialization, and the generic tag is slot 0's twin. That keeps
/// a tagless baseline and a K=1 ensemble numerically identical run-to-run.
struct EmbeddingLayout {
  int vocab_size = 0;
  int generic_tag_id = -1;
  int first_pseudo_tag_id = -1;  // -1 when the vocabulary has no pseudo-tags
  int num_pseudo_tags = 0;
  int first_content_id = 2;  // rows below this are PAD/UNK
};

/// Transformer encoder with embedding table, fixed sinusoidal positions,
/// post-norm self-attention blocks with GELU feed-forward, and a linear
/// task head. The sequence passed to encode() already starts with a tag
/// token at position 0.
class Model {
 public:
  Model(EncoderConfig config, TaskHead head, EmbeddingLayout layout, std::uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  const TaskHead& head() const { return head_; }
  const EmbeddingLayout& layout() const { return layout_; }

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  /// Token rows plus positional encoding; ids must be < vocab_size.
  Tensor embed(std::span<const int> token_ids) const;

  /// Full block stack. Train mode consumes dropout draws from `rng`.
  Tensor encode(const Tensor& embedded, bool training = false, Rng* rng = nullptr) const;

  /// Task logits from encoded features: 1xC for classification (pooled at
  /// the tag position), TxC for token labeling (tag position excluded).
  Tensor head_logits(const Tensor& hidden) const;

  /// Softmax distributions from head_logits.
  Tensor predict(const Tensor& hidden) const;

  /// Mean L2 norm of the content-token embedding rows (PAD/UNK and tag
  /// rows excluded); used to match the distinct-vector scale.
  Real mean_content_embedding_norm() const;

  const Matrix& positional_encoding() const { return positional_; }

 private:
  Tensor attention_block(const Tensor& x, int layer, bool training, Rng* rng) const;

  EncoderConfig config_;
  TaskHead head_;
  EmbeddingLayout layout_;
  ParameterStore params_;
  Matrix positional_;  // max_seq_len x D, fixed
};

/// Sinusoidal positional encoding table.
Matrix sinusoidal_positions(int max_len, int dim);

}  // namespace vens
