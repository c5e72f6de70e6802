#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vens/errors.hpp"
#include "vens/rng.hpp"

namespace vens {

using Real = double;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

namespace detail {

/// One node of the reverse-mode tape. `backward` consumes this node's
/// accumulated gradient and distributes it to the parents.
struct TensorNode {
  Matrix value;
  Matrix grad;  // empty until the backward pass reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward;

  bool has_grad() const { return grad.size() != 0; }
  void accumulate(const Matrix& g);
};

}  // namespace detail

/// Dense matrix-valued tensor participating in a reverse-mode autodiff
/// graph. Copies share the underlying node (shallow, tape-friendly);
/// values are 64-bit floats throughout. Scalars are 1x1, row vectors 1xN.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);
  Tensor(Index rows, Index cols, Real fill, bool requires_grad = false);

  static Tensor zeros(Index rows, Index cols, bool requires_grad = false);
  static Tensor scalar(Real v);
  static Tensor from_row(const RowVector& v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  Index size() const { return node_->value.size(); }
  std::string shape_str() const;

  const Matrix& value() const { return node_->value; }
  Matrix& value() { return node_->value; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  bool has_grad() const { return node_ && node_->has_grad(); }
  const Matrix& grad() const;
  void zero_grad();

  /// Value of a 1x1 tensor.
  Real item() const;

  /// Reverse pass from a scalar; seeds d(self)/d(self) = 1 and walks the
  /// tape in reverse topological order. Gradients accumulate into every
  /// requires_grad tensor reachable from here.
  void backward() const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// ---------------------------------------------------------------------------
// Free-function ops. Each builds a tape node; backward closures accumulate
// into whichever parents require gradients.
// ---------------------------------------------------------------------------

/// Matrix product [m x k] * [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, Real c);
Tensor operator*(Real c, const Tensor& a);

/// Elementwise (Hadamard) product.
Tensor cwise_mul(const Tensor& a, const Tensor& b);

/// Broadcast a 1xN row over every row of x.
Tensor rowwise_add(const Tensor& x, const Tensor& row);

Tensor transpose(const Tensor& a);

/// Rows [r0, r0+n) of x.
Tensor slice_rows(const Tensor& x, Index r0, Index n);
/// Columns [c0, c0+n) of x.
Tensor slice_cols(const Tensor& x, Index c0, Index n);
/// Horizontal concatenation; all parts must share a row count.
Tensor concat_cols(const std::vector<Tensor>& parts);

/// Gather rows of `table` by index; duplicate indices accumulate gradient.
Tensor gather_rows(const Tensor& table, std::span<const int> ids);

/// Numerically stabilized softmax. axis=1 normalizes each row (the default
/// distribution-over-columns layout), axis=0 each column.
Tensor softmax(const Tensor& x, int axis = 1);

/// Per-row layer normalization with affine output; gamma and beta are 1xH.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps);

Tensor gelu(const Tensor& x);

/// Inverted dropout: at train time keeps elements with probability 1-p and
/// rescales by 1/(1-p); eval or p==0 is the identity (no rng consumed).
Tensor dropout(const Tensor& x, Real p, Rng& rng, bool training);

/// Mean over the batch of the smoothed cross entropy between the target
/// distribution (1-s on the target class, s/(C-1) elsewhere) and
/// softmax(logits). logits is [B x C]; smoothing 0 is plain cross entropy.
Tensor cross_entropy_smoothed(const Tensor& logits, std::span<const int> targets,
                              Real smoothing);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

}  // namespace vens
