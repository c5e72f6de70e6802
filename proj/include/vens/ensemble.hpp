#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vens/rng.hpp"
#include "vens/tensor.hpp"

namespace vens {

/// K untrainable, mutually orthogonal D-dimensional row vectors at a fixed
/// scale. These are constants from the autodiff graph's point of view; they
/// are stored with the model but never updated.
struct DistinctVectorBank {
  int K = 0;
  int dim = 0;
  Real scale = 1.0;
  Matrix vectors;  // K x D, row k-1 is o_k

  /// Rows of a random orthogonal matrix (QR of a Gaussian draw with sign
  /// correction), each rescaled to norm `scale`. Deterministic in the rng
  /// stream. K must not exceed D.
  static DistinctVectorBank orthogonal(int K, int dim, Real scale, Rng rng);

  /// o_k for k in 1..K.
  RowVector vector(int k) const;

  /// Largest Gram-matrix deviation from scale^2 * I, for diagnostics.
  Real max_gram_error() const;
};

/// The K pseudo-tag vocabulary ids, 1-based lookup.
struct PseudoTagSet {
  int K = 0;
  std::vector<int> tag_ids;

  int tag_id(int k) const;
};

enum class Placement { emb, hidden, emb_plus_hidden };

enum class Ablation {
  full,                      // pseudo-tags + their own distinct vectors
  tags_only,                 // pseudo-tags alone, no vectors
  shuffled_correspondence,   // vector index redrawn uniformly per invocation
  random_noise,              // fresh Gaussian at norm s per invocation
};

enum class ScaleMode { fixed, match_embedding_norm };

struct AugmentationPolicy {
  Placement placement = Placement::emb;
  Ablation ablation = Ablation::full;
  ScaleMode scale_mode = ScaleMode::fixed;
  Real scale = 1.0;  // resolved value; match_embedding_norm fills it at model build
};

/// Which rows of the augmented sequence receive which constant offset.
/// The tag at position 0 never receives an offset; an inactive plan means
/// "add nothing" (the tags-only ablation).
struct OffsetPlan {
  bool active = false;
  Index first_row = 1;
  Index num_rows = 0;
  RowVector offset;
  Placement placement = Placement::emb;

  bool applies_at(Placement site) const;
};

struct AugmentedInput {
  std::vector<int> ids;  // pseudo-tag prepended
  OffsetPlan plan;
};

/// Prepend the k-th pseudo-tag and build the offset plan for the policy.
/// Every content position receives the same vector; which vector depends on
/// the ablation. The rng is consumed only by the randomized ablations.
AugmentedInput augment_input(std::span<const int> token_ids, int k,
                             const DistinctVectorBank* bank, const PseudoTagSet& tags,
                             const AugmentationPolicy& policy, Rng& rng);

/// Add the planned offsets to an embedding or hidden matrix when the plan
/// covers `site`; pure, returns the input unchanged otherwise.
Tensor apply_offsets(const Tensor& x, const OffsetPlan& plan, Placement site);

/// One augmented input per k in 1..K, for aggregation at inference.
std::vector<AugmentedInput> expand_for_inference(std::span<const int> token_ids, int K,
                                                 const DistinctVectorBank* bank,
                                                 const PseudoTagSet& tags,
                                                 const AugmentationPolicy& policy,
                                                 Rng& rng);

/// Text export, one vector per line, for inspection.
void write_bank_text(const DistinctVectorBank& bank, std::ostream& os);

}  // namespace vens
