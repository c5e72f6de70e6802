#pragma once

#include <cstdint>
#include <vector>

#include "vens/corpus.hpp"

namespace vens {

/// Synthetic two-class keyword task. Half the sentences carry one or two
/// keyword tokens and are labeled positive; observed labels are flipped
/// with probability `label_noise`, which sets the Bayes accuracy ceiling
/// and gives seeds room to vary.
struct SynthConfig {
  int n_train = 2000;
  int n_valid = 400;
  int n_test = 500;
  int vocab_size = 200;  // keyword types included
  int num_keywords = 10;
  int min_len = 6;
  int max_len = 12;
  double label_noise = 0.08;
  std::uint64_t seed = 0;
};

struct SynthData {
  std::vector<ClassificationExample> train;
  std::vector<ClassificationExample> valid;
  std::vector<ClassificationExample> test;
  LabelIndex labels;  // "neg" = 0, "pos" = 1
};

SynthData make_synthetic_classification(const SynthConfig& config);

}  // namespace vens
