#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vens/tensor.hpp"

namespace vens {

/// Named weight tensor. `trainable == false` marks state the optimizer must
/// never touch (the distinct-vector bank); it is still serialized and
/// counted separately from the trainable parameters.
struct Parameter {
  std::string name;
  Tensor tensor;  // requires_grad is true for every registered parameter
  bool trainable = true;
};

/// Flat ordered collection of a model's parameters.
class ParameterStore {
 public:
  Tensor& add(std::string name, Matrix value, bool trainable = true);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }

  void zero_grad();

  /// Number of scalars in trainable parameters.
  std::int64_t trainable_count() const;
  std::int64_t total_count() const;

  /// Deep copies of every parameter value, in registration order.
  std::vector<Matrix> snapshot_values() const;
  void restore_values(const std::vector<Matrix>& values);

 private:
  std::vector<Parameter> params_;
};

/// Scale every gradient by max_norm / g when the global L2 norm g exceeds
/// max_norm. Returns the pre-clip norm.
Real clip_global_norm(ParameterStore& params, Real max_norm);

struct AdamConfig {
  Real lr = 1e-4;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
};

/// Adam with bias correction. Parameters without a gradient this step keep
/// their moments decayed to zero implicitly (no update); untrainable
/// parameters are never touched.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig config) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_; }

  void step(ParameterStore& params);

 private:
  struct Slot {
    Matrix m;
    Matrix v;
  };

  AdamConfig config_;
  std::vector<Slot> slots_;
  std::int64_t step_ = 0;
};

}  // namespace vens
