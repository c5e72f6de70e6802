#include "vens/ensemble.hpp"

#include <Eigen/QR>
#include <cmath>
#include <ostream>

namespace vens {

DistinctVectorBank DistinctVectorBank::orthogonal(int K, int dim, Real scale, Rng rng) {
  if (K < 1) throw ConfigError("distinct vectors: K must be positive");
  if (scale < 0) throw ConfigError("distinct vectors: scale must be non-negative");
  if (K > dim) {
    throw ConfigError("distinct vectors: cannot fit " + std::to_string(K) +
                      " mutually orthogonal vectors in dimension " + std::to_string(dim));
  }

  // QR of a tall Gaussian matrix; sign-correcting with diag(R) makes the
  // distribution over orthogonal frames uniform.
  Matrix gauss(dim, K);
  for (Index i = 0; i < gauss.rows(); ++i) {
    for (Index j = 0; j < gauss.cols(); ++j) gauss(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, K);
  const Matrix r = qr.matrixQR().topRows(K).triangularView<Eigen::Upper>();
  for (int j = 0; j < K; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }

  DistinctVectorBank bank;
  bank.K = K;
  bank.dim = dim;
  bank.scale = scale;
  bank.vectors = scale * q.transpose();
  return bank;
}

RowVector DistinctVectorBank::vector(int k) const {
  if (k < 1 || k > K) {
    throw IndexError("distinct vectors: virtual model index " + std::to_string(k) +
                     " out of range [1, " + std::to_string(K) + "]");
  }
  return vectors.row(k - 1);
}

Real DistinctVectorBank::max_gram_error() const {
  const Matrix gram = vectors * vectors.transpose();
  const Matrix target = scale * scale * Matrix::Identity(K, K);
  return (gram - target).cwiseAbs().maxCoeff();
}

int PseudoTagSet::tag_id(int k) const {
  if (k < 1 || k > K) {
    throw IndexError("pseudo tags: virtual model index " + std::to_string(k) +
                     " out of range [1, " + std::to_string(K) + "]");
  }
  return tag_ids[static_cast<std::size_t>(k - 1)];
}

bool OffsetPlan::applies_at(Placement site) const {
  if (!active || num_rows == 0) return false;
  if (placement == Placement::emb_plus_hidden) return true;
  return placement == site;
}

AugmentedInput augment_input(std::span<const int> token_ids, int k,
                             const DistinctVectorBank* bank, const PseudoTagSet& tags,
                             const AugmentationPolicy& policy, Rng& rng) {
  if (token_ids.empty()) throw ShapeError("augment_input: empty token sequence");
  if (k < 1 || k > tags.K) {
    throw IndexError("augment_input: virtual model index " + std::to_string(k) +
                     " out of range [1, " + std::to_string(tags.K) + "]");
  }

  AugmentedInput out;
  out.ids.reserve(token_ids.size() + 1);
  out.ids.push_back(tags.tag_id(k));
  out.ids.insert(out.ids.end(), token_ids.begin(), token_ids.end());

  if (policy.ablation == Ablation::tags_only) return out;
  if (!bank) throw ConfigError("augment_input: policy needs a distinct-vector bank");

  RowVector offset;
  switch (policy.ablation) {
    case Ablation::full:
      offset = bank->vector(k);
      break;
    case Ablation::shuffled_correspondence:
      offset = bank->vector(1 + rng.uniform_int(bank->K));
      break;
    case Ablation::random_noise: {
      RowVector noise(bank->dim);
      for (int j = 0; j < bank->dim; ++j) noise(j) = rng.gaussian();
      const Real norm = noise.norm();
      offset = norm > 0 ? RowVector((policy.scale / norm) * noise)
                        : RowVector::Zero(bank->dim);
      break;
    }
    case Ablation::tags_only:
      break;
  }

  out.plan.active = true;
  out.plan.first_row = 1;
  out.plan.num_rows = static_cast<Index>(token_ids.size());
  out.plan.offset = offset;
  out.plan.placement = policy.placement;
  return out;
}

Tensor apply_offsets(const Tensor& x, const OffsetPlan& plan, Placement site) {
  if (!plan.applies_at(site)) return x;
  if (plan.offset.size() != x.cols()) {
    throw ShapeError("apply_offsets: offset width " + std::to_string(plan.offset.size()) +
                     " does not match " + x.shape_str());
  }
  if (plan.first_row < 0 || plan.first_row + plan.num_rows > x.rows()) {
    throw ShapeError("apply_offsets: plan rows [" + std::to_string(plan.first_row) + ", " +
                     std::to_string(plan.first_row + plan.num_rows) + ") out of " +
                     x.shape_str());
  }
  Matrix offsets = Matrix::Zero(x.rows(), x.cols());
  offsets.middleRows(plan.first_row, plan.num_rows).rowwise() = plan.offset;
  return x + Tensor(std::move(offsets));
}

std::vector<AugmentedInput> expand_for_inference(std::span<const int> token_ids, int K,
                                                 const DistinctVectorBank* bank,
                                                 const PseudoTagSet& tags,
                                                 const AugmentationPolicy& policy,
                                                 Rng& rng) {
  std::vector<AugmentedInput> out;
  out.reserve(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) {
    out.push_back(augment_input(token_ids, k, bank, tags, policy, rng));
  }
  return out;
}

void write_bank_text(const DistinctVectorBank& bank, std::ostream& os) {
  os.precision(17);
  for (int k = 0; k < bank.K; ++k) {
    for (int j = 0; j < bank.dim; ++j) {
      if (j) os << ' ';
      os << bank.vectors(k, j);
    }
    os << '\n';
  }
}

}  // namespace vens
