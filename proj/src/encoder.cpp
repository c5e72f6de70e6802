#include "vens/encoder.hpp"

#include <cmath>

namespace vens {

void EncoderConfig::validate() const {
  if (vocab_size <= 0) throw ConfigError("encoder: vocab_size must be positive");
  if (embed_dim <= 0) throw ConfigError("encoder: embed_dim must be positive");
  if (num_layers <= 0) throw ConfigError("encoder: num_layers must be positive");
  if (num_heads <= 0) throw ConfigError("encoder: num_heads must be positive");
  if (ff_dim <= 0) throw ConfigError("encoder: ff_dim must be positive");
  if (max_seq_len <= 1) throw ConfigError("encoder: max_seq_len must leave room for a tag");
  if (embed_dim % num_heads != 0) {
    throw ConfigError("encoder: embed_dim " + std::to_string(embed_dim) +
                      " not divisible by num_heads " + std::to_string(num_heads));
  }
  if (dropout_residual < 0 || dropout_residual >= 1 || dropout_attention < 0 ||
      dropout_attention >= 1) {
    throw ConfigError("encoder: dropout probabilities must be in [0, 1)");
  }
}

Matrix sinusoidal_positions(int max_len, int dim) {
  Matrix pe(max_len, dim);
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i < dim; ++i) {
      const double angle =
          pos / std::pow(10000.0, static_cast<double>(2 * (i / 2)) / dim);
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

namespace {

constexpr Real kLayerNormEps = 1e-5;

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng, Real stddev) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = stddev * rng.gaussian();
  }
  return m;
}

Matrix xavier_matrix(Index rows, Index cols, Rng rng) {
  const Real stddev = std::sqrt(2.0 / static_cast<Real>(rows + cols));
  return gaussian_matrix(rows, cols, rng, stddev);
}

/// Embedding rows are unit-variance Gaussian. Content rows draw from one
/// per-row stream keyed by the row index; tag rows (generic + pseudo) draw
/// from per-slot streams so the block's values do not depend on how many
/// slots exist.
Matrix embedding_matrix(const EmbeddingLayout& layout, int dim, const Rng& seed_rng) {
  Matrix e(layout.vocab_size, dim);
  for (int r = 0; r < layout.vocab_size; ++r) {
    Rng row_rng(0);
    if (r == layout.generic_tag_id) {
      row_rng = seed_rng.fork("tag-slot", 0);
    } else if (layout.first_pseudo_tag_id >= 0 && r >= layout.first_pseudo_tag_id) {
      row_rng = seed_rng.fork("tag-slot", static_cast<std::uint64_t>(r - layout.first_pseudo_tag_id));
    } else {
      row_rng = seed_rng.fork("emb-row", static_cast<std::uint64_t>(r));
    }
    for (int j = 0; j < dim; ++j) e(r, j) = row_rng.gaussian();
  }
  return e;
}

}  // namespace

Model::Model(EncoderConfig config, TaskHead head, EmbeddingLayout layout,
             std::uint64_t seed)
    : config_(config), head_(head), layout_(layout) {
  config_.validate();
  if (layout_.vocab_size != config_.vocab_size) {
    throw ConfigError("model: layout vocab_size " + std::to_string(layout_.vocab_size) +
                      " != encoder vocab_size " + std::to_string(config_.vocab_size));
  }
  if (head_.num_classes <= 0) throw ConfigError("model: head needs at least one class");

  const int d = config_.embed_dim;
  Rng root(seed);

  params_.add("embeddings", embedding_matrix(layout_, d, root));
  for (int l = 0; l < config_.num_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    params_.add(p + "attn.wq", xavier_matrix(d, d, root.fork(p + "attn.wq")));
    params_.add(p + "attn.wk", xavier_matrix(d, d, root.fork(p + "attn.wk")));
    params_.add(p + "attn.wv", xavier_matrix(d, d, root.fork(p + "attn.wv")));
    params_.add(p + "attn.wo", xavier_matrix(d, d, root.fork(p + "attn.wo")));
    params_.add(p + "attn.bq", Matrix::Zero(1, d));
    params_.add(p + "attn.bk", Matrix::Zero(1, d));
    params_.add(p + "attn.bv", Matrix::Zero(1, d));
    params_.add(p + "attn.bo", Matrix::Zero(1, d));
    params_.add(p + "ln1.gamma", Matrix::Ones(1, d));
    params_.add(p + "ln1.beta", Matrix::Zero(1, d));
    params_.add(p + "ff.w1", xavier_matrix(d, config_.ff_dim, root.fork(p + "ff.w1")));
    params_.add(p + "ff.b1", Matrix::Zero(1, config_.ff_dim));
    params_.add(p + "ff.w2", xavier_matrix(config_.ff_dim, d, root.fork(p + "ff.w2")));
    params_.add(p + "ff.b2", Matrix::Zero(1, d));
    params_.add(p + "ln2.gamma", Matrix::Ones(1, d));
    params_.add(p + "ln2.beta", Matrix::Zero(1, d));
  }
  params_.add("head.projection",
              xavier_matrix(d, head_.num_classes, root.fork("head.projection")));

  positional_ = sinusoidal_positions(config_.max_seq_len, d);
}

Tensor Model::embed(std::span<const int> token_ids) const {
  for (int id : token_ids) {
    if (id < 0 || id >= config_.vocab_size) {
      throw VocabularyError("embed: token id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(config_.vocab_size));
    }
  }
  const auto t = static_cast<Index>(token_ids.size());
  if (t > config_.max_seq_len) {
    throw ShapeError("embed: sequence length " + std::to_string(t) + " exceeds max " +
                     std::to_string(config_.max_seq_len));
  }
  const Tensor& table = params_.at("embeddings").tensor;
  Tensor e = gather_rows(table, token_ids);
  if (t == 0) return e;
  Tensor pe(positional_.topRows(t));
  return e + pe;
}

Tensor Model::attention_block(const Tensor& x, int layer, bool training, Rng* rng) const {
  const std::string p = "layers." + std::to_string(layer) + ".";
  const int d = config_.embed_dim;
  const int heads = config_.num_heads;
  const int dh = d / heads;
  const Real inv_sqrt_dh = 1.0 / std::sqrt(static_cast<Real>(dh));

  auto param = [&](const std::string& n) -> const Tensor& {
    return params_.at(p + n).tensor;
  };

  Tensor q = rowwise_add(matmul(x, param("attn.wq")), param("attn.bq"));
  Tensor k = rowwise_add(matmul(x, param("attn.wk")), param("attn.bk"));
  Tensor v = rowwise_add(matmul(x, param("attn.wv")), param("attn.bv"));

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, dh);
    Tensor kh = slice_cols(k, h * dh, dh);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor scores = matmul(qh, transpose(kh)) * inv_sqrt_dh;
    Tensor attn = softmax(scores, 1);
    if (training && rng) attn = dropout(attn, config_.dropout_attention, *rng, true);
    head_outputs.push_back(matmul(attn, vh));
  }
  Tensor merged = heads == 1 ? head_outputs.front() : concat_cols(head_outputs);
  return rowwise_add(matmul(merged, param("attn.wo")), param("attn.bo"));
}

Tensor Model::encode(const Tensor& embedded, bool training, Rng* rng) const {
  if (embedded.rows() < 1) throw ShapeError("encode: empty sequence");
  if (embedded.rows() > config_.max_seq_len) {
    throw ShapeError("encode: sequence length " + std::to_string(embedded.rows()) +
                     " exceeds max " + std::to_string(config_.max_seq_len));
  }
  if (embedded.cols() != config_.embed_dim) {
    throw ShapeError("encode: expected width " + std::to_string(config_.embed_dim) +
                     ", got " + embedded.shape_str());
  }

  Tensor x = embedded;
  for (int l = 0; l < config_.num_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    Tensor sa = attention_block(x, l, training, rng);
    if (training && rng) sa = dropout(sa, config_.dropout_residual, *rng, true);
    x = layer_norm(x + sa, params_.at(p + "ln1.gamma").tensor,
                   params_.at(p + "ln1.beta").tensor, kLayerNormEps);

    Tensor ff = rowwise_add(matmul(x, params_.at(p + "ff.w1").tensor),
                            params_.at(p + "ff.b1").tensor);
    ff = gelu(ff);
    ff = rowwise_add(matmul(ff, params_.at(p + "ff.w2").tensor),
                     params_.at(p + "ff.b2").tensor);
    if (training && rng) ff = dropout(ff, config_.dropout_residual, *rng, true);
    x = layer_norm(x + ff, params_.at(p + "ln2.gamma").tensor,
                   params_.at(p + "ln2.beta").tensor, kLayerNormEps);
  }
  return x;
}

Tensor Model::head_logits(const Tensor& hidden) const {
  if (hidden.rows() < 2) {
    throw ShapeError("head: sequence holds only the tag position, no content");
  }
  const Tensor& w = params_.at("head.projection").tensor;
  if (head_.kind == HeadKind::classification) {
    return matmul(slice_rows(hidden, 0, 1), w);
  }
  return matmul(slice_rows(hidden, 1, hidden.rows() - 1), w);
}

Tensor Model::predict(const Tensor& hidden) const { return softmax(head_logits(hidden), 1); }

Real Model::mean_content_embedding_norm() const {
  const Matrix& e = params_.at("embeddings").tensor.value();
  const int first = layout_.first_content_id;
  int last = layout_.generic_tag_id >= 0 ? layout_.generic_tag_id : layout_.vocab_size;
  if (last <= first) return 0.0;
  Real total = 0.0;
  for (int r = first; r < last; ++r) total += e.row(r).norm();
  return total / static_cast<Real>(last - first);
}

}  // namespace vens
