#include "vens/tensor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

namespace vens {

namespace detail {

void TensorNode::accumulate(const Matrix& g) {
  if (!requires_grad) return;
  if (!has_grad()) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }
  grad += g;
}

}  // namespace detail

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

std::string shape_of(const Matrix& m) {
  std::ostringstream os;
  os << "(" << m.rows() << "x" << m.cols() << ")";
  return os.str();
}

}  // namespace

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<TensorNode>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor::Tensor(Index rows, Index cols, Real fill, bool requires_grad)
    : Tensor(Matrix::Constant(rows, cols, fill), requires_grad) {}

Tensor Tensor::zeros(Index rows, Index cols, bool requires_grad) {
  return Tensor(Matrix::Zero(rows, cols), requires_grad);
}

Tensor Tensor::scalar(Real v) { return Tensor(Matrix::Constant(1, 1, v)); }

Tensor Tensor::from_row(const RowVector& v, bool requires_grad) {
  Matrix m(1, v.size());
  m.row(0) = v;
  return Tensor(std::move(m), requires_grad);
}

std::string Tensor::shape_str() const { return shape_of(node_->value); }

const Matrix& Tensor::grad() const {
  if (!has_grad()) {
    throw Error("Tensor::grad: no gradient present; run backward() first");
  }
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.resize(0, 0);
}

Real Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("Tensor::item: tensor is not scalar, shape " + shape_str());
  }
  return node_->value(0, 0);
}

void Tensor::backward() const {
  if (!node_) throw Error("Tensor::backward: empty tensor");
  if (node_->value.size() != 1) {
    throw ShapeError("Tensor::backward: loss must be scalar, shape " + shape_str());
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS restricted to the requires_grad subgraph.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  struct Frame {
    TensorNode* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({node_.get(), 0});
  visited.insert(node_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorNode* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  node_->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward && n->has_grad()) {
      n->backward(*n);
    }
  }
}

// ---------------------------------------------------------------------------
// op helpers
// ---------------------------------------------------------------------------

namespace {

Tensor make_op(Matrix value, std::vector<Tensor> inputs,
               std::function<void(TensorNode&)> backward) {
  bool needs_grad = false;
  for (const auto& t : inputs) needs_grad = needs_grad || t.requires_grad();
  Tensor out(std::move(value), needs_grad);
  if (needs_grad) {
    auto node = out.node();
    node->parents.reserve(inputs.size());
    for (const auto& t : inputs) node->parents.push_back(t.node());
    node->backward = std::move(backward);
  }
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree: " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.value() * b.value(), {a, b}, [an, bn](TensorNode& out) {
    an->accumulate(out.grad * bn->value.transpose());
    bn->accumulate(an->value.transpose() * out.grad);
  });
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.value() + b.value(), {a, b}, [an, bn](TensorNode& out) {
    an->accumulate(out.grad);
    bn->accumulate(out.grad);
  });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.value() - b.value(), {a, b}, [an, bn](TensorNode& out) {
    an->accumulate(out.grad);
    bn->accumulate(-out.grad);
  });
}

Tensor operator*(const Tensor& a, Real c) {
  auto an = a.node();
  return make_op(a.value() * c, {a},
                 [an, c](TensorNode& out) { an->accumulate(out.grad * c); });
}

Tensor operator*(Real c, const Tensor& a) { return a * c; }

Tensor cwise_mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "cwise_mul");
  auto an = a.node();
  auto bn = b.node();
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [an, bn](TensorNode& out) {
    an->accumulate(out.grad.cwiseProduct(bn->value));
    bn->accumulate(out.grad.cwiseProduct(an->value));
  });
}

Tensor rowwise_add(const Tensor& x, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ShapeError("rowwise_add: row must be 1x" + std::to_string(x.cols()) +
                     ", got " + row.shape_str());
  }
  auto xn = x.node();
  auto rn = row.node();
  Matrix v = x.value();
  v.rowwise() += row.value().row(0);
  return make_op(std::move(v), {x, row}, [xn, rn](TensorNode& out) {
    xn->accumulate(out.grad);
    rn->accumulate(out.grad.colwise().sum());
  });
}

Tensor transpose(const Tensor& a) {
  auto an = a.node();
  return make_op(a.value().transpose(), {a},
                 [an](TensorNode& out) { an->accumulate(out.grad.transpose()); });
}

Tensor slice_rows(const Tensor& x, Index r0, Index n) {
  if (r0 < 0 || n < 0 || r0 + n > x.rows()) {
    throw ShapeError("slice_rows: range [" + std::to_string(r0) + ", " +
                     std::to_string(r0 + n) + ") out of " + x.shape_str());
  }
  auto xn = x.node();
  return make_op(x.value().middleRows(r0, n), {x}, [xn, r0, n](TensorNode& out) {
    if (!xn->requires_grad) return;
    Matrix g = Matrix::Zero(xn->value.rows(), xn->value.cols());
    g.middleRows(r0, n) = out.grad;
    xn->accumulate(g);
  });
}

Tensor slice_cols(const Tensor& x, Index c0, Index n) {
  if (c0 < 0 || n < 0 || c0 + n > x.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + ", " +
                     std::to_string(c0 + n) + ") out of " + x.shape_str());
  }
  auto xn = x.node();
  return make_op(x.value().middleCols(c0, n), {x}, [xn, c0, n](TensorNode& out) {
    if (!xn->requires_grad) return;
    Matrix g = Matrix::Zero(xn->value.rows(), xn->value.cols());
    g.middleCols(c0, n) = out.grad;
    xn->accumulate(g);
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty part list");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row count mismatch " + parts.front().shape_str() +
                       " vs " + p.shape_str());
    }
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  for (const auto& p : parts) nodes.push_back(p.node());
  return make_op(std::move(v), parts, [nodes](TensorNode& out) {
    Index at = 0;
    for (const auto& n : nodes) {
      n->accumulate(out.grad.middleCols(at, n->value.cols()));
      at += n->value.cols();
    }
  });
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
  const Index rows = table.rows();
  for (int id : ids) {
    if (id < 0 || id >= rows) {
      throw IndexError("gather_rows: row index " + std::to_string(id) +
                       " out of table " + table.shape_str());
    }
  }
  Matrix v(static_cast<Index>(ids.size()), table.cols());
  for (Index i = 0; i < v.rows(); ++i) v.row(i) = table.value().row(ids[i]);
  auto tn = table.node();
  std::vector<int> idx(ids.begin(), ids.end());
  return make_op(std::move(v), {table}, [tn, idx](TensorNode& out) {
    if (!tn->requires_grad) return;
    Matrix g = Matrix::Zero(tn->value.rows(), tn->value.cols());
    for (Index i = 0; i < out.grad.rows(); ++i) g.row(idx[i]) += out.grad.row(i);
    tn->accumulate(g);
  });
}

namespace {

Matrix rowwise_softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const Real m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  return y;
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
  if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
  if (!x.value().allFinite()) {
    throw NumericError("softmax: input contains non-finite values");
  }
  if (axis == 0) return transpose(softmax(transpose(x), 1));

  Matrix y = rowwise_softmax(x.value());
  auto xn = x.node();
  return make_op(std::move(y), {x}, [xn](TensorNode& out) {
    // dx_i = y_i * (g_i - sum_j g_j y_j), per row
    const Matrix& y = out.value;
    const Matrix& g = out.grad;
    Matrix dx(y.rows(), y.cols());
    for (Index i = 0; i < y.rows(); ++i) {
      const Real dot = g.row(i).dot(y.row(i));
      dx.row(i) = y.row(i).array() * (g.row(i).array() - dot);
    }
    xn->accumulate(dx);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
  const Index h = x.cols();
  if (h < 2) {
    throw NumericError("layer_norm: feature width " + std::to_string(h) +
                       " has singular variance");
  }
  if (eps <= 0) throw NumericError("layer_norm: eps must be positive");
  if (gamma.rows() != 1 || gamma.cols() != h || beta.rows() != 1 || beta.cols() != h) {
    throw ShapeError("layer_norm: gamma/beta must be 1x" + std::to_string(h));
  }

  const Matrix& xv = x.value();
  Matrix xhat(xv.rows(), h);
  Eigen::VectorXd inv_std(xv.rows());
  for (Index i = 0; i < xv.rows(); ++i) {
    const Real mu = xv.row(i).mean();
    const auto centered = xv.row(i).array() - mu;
    const Real var = centered.square().mean();
    const Real inv = 1.0 / std::sqrt(var + eps);
    inv_std(i) = inv;
    xhat.row(i) = (centered * inv).matrix();
  }
  Matrix y = xhat;
  y.array().rowwise() *= gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);

  auto xn = x.node();
  auto gn = gamma.node();
  auto bn = beta.node();
  return make_op(std::move(y), {x, gamma, beta},
                 [xn, gn, bn, xhat, inv_std, h](TensorNode& out) {
                   const Matrix& g = out.grad;
                   bn->accumulate(g.colwise().sum());
                   gn->accumulate(g.cwiseProduct(xhat).colwise().sum());
                   if (!xn->requires_grad) return;
                   Matrix dx(g.rows(), g.cols());
                   const auto gamma_row = gn->value.row(0).array();
                   for (Index i = 0; i < g.rows(); ++i) {
                     const auto dxhat = (g.row(i).array() * gamma_row).eval();
                     const Real mean_dxhat = dxhat.mean();
                     const Real mean_dxhat_xhat =
                         (dxhat * xhat.row(i).array()).mean();
                     dx.row(i) = (inv_std(i) *
                                  (dxhat - mean_dxhat -
                                   xhat.row(i).array() * mean_dxhat_xhat))
                                     .matrix();
                   }
                   xn->accumulate(dx);
                 });
}

namespace {

Real gaussian_cdf(Real x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

}  // namespace

Tensor gelu(const Tensor& x) {
  Matrix y = x.value().unaryExpr([](Real v) { return v * gaussian_cdf(v); });
  auto xn = x.node();
  return make_op(std::move(y), {x}, [xn](TensorNode& out) {
    const Matrix local = xn->value.unaryExpr([](Real v) {
      const Real pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
      return gaussian_cdf(v) + v * pdf;
    });
    xn->accumulate(out.grad.cwiseProduct(local));
  });
}

Tensor dropout(const Tensor& x, Real p, Rng& rng, bool training) {
  if (p < 0 || p >= 1) throw NumericError("dropout: p must be in [0, 1)");
  if (!training || p == 0.0) return x;
  Matrix mask(x.rows(), x.cols());
  const Real keep_scale = 1.0 / (1.0 - p);
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) {
      mask(i, j) = rng.uniform() < p ? 0.0 : keep_scale;
    }
  }
  auto xn = x.node();
  return make_op(x.value().cwiseProduct(mask), {x}, [xn, mask](TensorNode& out) {
    xn->accumulate(out.grad.cwiseProduct(mask));
  });
}

Tensor cross_entropy_smoothed(const Tensor& logits, std::span<const int> targets,
                              Real smoothing) {
  const Index batch = logits.rows();
  const Index classes = logits.cols();
  if (static_cast<Index>(targets.size()) != batch) {
    throw ShapeError("cross_entropy_smoothed: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(batch) + " logit rows");
  }
  if (smoothing < 0 || smoothing >= 1) {
    throw NumericError("cross_entropy_smoothed: smoothing must be in [0, 1)");
  }
  if (smoothing > 0 && classes < 2) {
    throw NumericError("cross_entropy_smoothed: smoothing requires at least 2 classes");
  }
  for (int t : targets) {
    if (t < 0 || t >= classes) {
      throw IndexError("cross_entropy_smoothed: target " + std::to_string(t) +
                       " out of range [0, " + std::to_string(classes) + ")");
    }
  }

  const Matrix& z = logits.value();
  const Real off = classes > 1 ? smoothing / static_cast<Real>(classes - 1) : 0.0;
  const Real on = 1.0 - smoothing;
  Real total = 0.0;
  Eigen::VectorXd lse(batch);
  for (Index i = 0; i < batch; ++i) {
    const Real m = z.row(i).maxCoeff();
    lse(i) = m + std::log((z.row(i).array() - m).exp().sum());
    // -sum_c q_c * (z_c - lse) with q the smoothed target distribution
    Real dot = on * z(i, targets[i]);
    if (off > 0) {
      dot += off * (z.row(i).sum() - z(i, targets[i]));
    }
    total += lse(i) - dot;
  }
  Matrix loss(1, 1);
  loss(0, 0) = total / static_cast<Real>(batch);

  auto ln = logits.node();
  std::vector<int> tgt(targets.begin(), targets.end());
  return make_op(std::move(loss), {logits}, [ln, tgt, on, off, batch](TensorNode& out) {
    if (!ln->requires_grad) return;
    const Real scale = out.grad(0, 0) / static_cast<Real>(batch);
    // d loss / d z = softmax(z) - q
    Matrix dz = rowwise_softmax(ln->value);
    for (Index i = 0; i < dz.rows(); ++i) {
      dz.row(i).array() -= off;
      dz(i, tgt[i]) -= on - off;
    }
    ln->accumulate(dz * scale);
  });
}

Tensor sum_all(const Tensor& x) {
  Matrix v(1, 1);
  v(0, 0) = x.value().sum();
  auto xn = x.node();
  return make_op(std::move(v), {x}, [xn](TensorNode& out) {
    xn->accumulate(Matrix::Constant(xn->value.rows(), xn->value.cols(), out.grad(0, 0)));
  });
}

Tensor mean_all(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean_all: empty tensor");
  Matrix v(1, 1);
  v(0, 0) = x.value().mean();
  auto xn = x.node();
  return make_op(std::move(v), {x}, [xn](TensorNode& out) {
    const Real g = out.grad(0, 0) / static_cast<Real>(xn->value.size());
    xn->accumulate(Matrix::Constant(xn->value.rows(), xn->value.cols(), g));
  });
}

}  // namespace vens
