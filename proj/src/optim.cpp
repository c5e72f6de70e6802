#include "vens/optim.hpp"

#include <cmath>

namespace vens {

Tensor& ParameterStore::add(std::string name, Matrix value, bool trainable) {
  if (contains(name)) throw ConfigError("ParameterStore: duplicate parameter " + name);
  params_.push_back(Parameter{std::move(name), Tensor(std::move(value), true), trainable});
  return params_.back().tensor;
}

Parameter& ParameterStore::at(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw ConfigError("ParameterStore: unknown parameter " + name);
}

const Parameter& ParameterStore::at(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->at(name);
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

std::int64_t ParameterStore::trainable_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable) n += p.tensor.size();
  }
  return n;
}

std::int64_t ParameterStore::total_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

std::vector<Matrix> ParameterStore::snapshot_values() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor.value());
  return out;
}

void ParameterStore::restore_values(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) {
    throw StateError("ParameterStore: snapshot has " + std::to_string(values.size()) +
                     " entries for " + std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params_[i].tensor.value() = values[i];
  }
}

Real clip_global_norm(ParameterStore& params, Real max_norm) {
  if (max_norm <= 0) throw NumericError("clip_global_norm: max_norm must be positive");
  Real sq = 0.0;
  for (const auto& p : params.all()) {
    if (p.trainable && p.tensor.has_grad()) sq += p.tensor.grad().squaredNorm();
  }
  const Real norm = std::sqrt(sq);
  if (norm > max_norm) {
    const Real scale = max_norm / norm;
    for (auto& p : params.all()) {
      if (p.trainable && p.tensor.has_grad()) {
        p.tensor.node()->grad *= scale;
      }
    }
  }
  return norm;
}

void AdamOptimizer::step(ParameterStore& params) {
  auto& all = params.all();
  if (slots_.empty()) {
    slots_.resize(all.size());
  } else if (slots_.size() != all.size()) {
    throw StateError("AdamOptimizer: parameter count changed from " +
                     std::to_string(slots_.size()) + " to " + std::to_string(all.size()));
  }

  ++step_;
  const Real bc1 = 1.0 - std::pow(config_.beta1, static_cast<Real>(step_));
  const Real bc2 = 1.0 - std::pow(config_.beta2, static_cast<Real>(step_));

  for (std::size_t i = 0; i < all.size(); ++i) {
    Parameter& p = all[i];
    if (!p.trainable || !p.tensor.has_grad()) continue;

    const Matrix& g = p.tensor.grad();
    Slot& slot = slots_[i];
    if (slot.m.size() == 0) {
      slot.m = Matrix::Zero(g.rows(), g.cols());
      slot.v = Matrix::Zero(g.rows(), g.cols());
    } else if (slot.m.rows() != g.rows() || slot.m.cols() != g.cols()) {
      throw StateError("AdamOptimizer: state shape drift for parameter " + p.name);
    }

    slot.m = config_.beta1 * slot.m + (1.0 - config_.beta1) * g;
    slot.v = config_.beta2 * slot.v + (1.0 - config_.beta2) * g.cwiseProduct(g);

    const auto m_hat = slot.m.array() / bc1;
    const auto v_hat = slot.v.array() / bc2;
    p.tensor.value().array() -= config_.lr * m_hat / (v_hat + config_.eps).sqrt();
  }
}

}  // namespace vens
