#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <bitset>
#include <sstream>
#include <algorithm>

#include "support/gradcheck.hpp"
#include "vens/encoder.hpp"
#include "vens/ensemble.hpp"

using namespace vens;
using vens::test::random_matrix;

namespace {

DistinctVectorBank axis_bank(Real s) {
  DistinctVectorBank bank;
  bank.K = 2;
  bank.dim = 2;
  bank.scale = s;
  bank.vectors = s * Matrix::Identity(2, 2);
  return bank;
}

PseudoTagSet two_tags() { return PseudoTagSet{2, {10, 11}}; }

EncoderConfig tiny_config(int vocab, int dim) {
  EncoderConfig cfg;
  cfg.vocab_size = vocab;
  cfg.embed_dim = dim;
  cfg.num_layers = 2;
  cfg.num_heads = 2;
  cfg.ff_dim = 16;
  cfg.max_seq_len = 16;
  return cfg;
}

EmbeddingLayout tiny_layout(int vocab, int tags) {
  EmbeddingLayout l;
  l.vocab_size = vocab;
  l.generic_tag_id = vocab - tags - 1;
  l.first_pseudo_tag_id = tags > 0 ? vocab - tags : -1;
  l.num_pseudo_tags = tags;
  return l;
}

}  // namespace

TEST_CASE("single orthogonal vector has unit norm") {
  DistinctVectorBank bank = DistinctVectorBank::orthogonal(1, 4, 1.0, Rng(3));
  CHECK(bank.vectors.rows() == 1);
  CHECK(bank.vectors.cols() == 4);
  CHECK(bank.vector(1).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nine vectors in dimension 64 at scale 3 form 9I") {
  DistinctVectorBank bank = DistinctVectorBank::orthogonal(9, 64, 3.0, Rng(11));
  const Matrix gram = bank.vectors * bank.vectors.transpose();
  for (int i = 0; i < 9; ++i) {
    CHECK(std::abs(gram(i, i) - 9.0) <= 9e-5);
    for (int j = 0; j < 9; ++j) {
      if (i != j) CHECK(std::abs(gram(i, j)) <= 9e-5);
    }
  }
  CHECK(bank.max_gram_error() <= 9e-5);
}

TEST_CASE("more vectors than dimensions is infeasible") {
  CHECK_THROWS_AS(DistinctVectorBank::orthogonal(65, 64, 1.0, Rng(1)), ConfigError);
}

TEST_CASE("bank generation is deterministic in the seed") {
  DistinctVectorBank a = DistinctVectorBank::orthogonal(4, 16, 2.0, Rng(9));
  DistinctVectorBank b = DistinctVectorBank::orthogonal(4, 16, 2.0, Rng(9));
  DistinctVectorBank c = DistinctVectorBank::orthogonal(4, 16, 2.0, Rng(10));
  CHECK(a.vectors == b.vectors);
  CHECK(a.vectors != c.vectors);
}

TEST_CASE("orthogonality holds across random K and D") {
  Rng meta(123);
  for (int trial = 0; trial < 25; ++trial) {
    const int dim = 2 + meta.uniform_int(62);
    const int k = 1 + meta.uniform_int(dim);
    const Real s = meta.uniform(0.5, 10.0);
    DistinctVectorBank bank =
        DistinctVectorBank::orthogonal(k, dim, s, Rng(meta.next_u64()));
    CHECK(bank.max_gram_error() <= 1e-5 * s * s);
  }
}

TEST_CASE("augment_input prepends the tag and plans content offsets") {
  DistinctVectorBank bank = axis_bank(3.0);
  PseudoTagSet tags = two_tags();
  AugmentationPolicy policy;
  policy.scale = 3.0;
  Rng rng(1);

  const std::vector<int> ids{3, 4, 5};
  AugmentedInput aug = augment_input(ids, 2, &bank, tags, policy, rng);
  CHECK(aug.ids == std::vector<int>{11, 3, 4, 5});
  CHECK(aug.plan.active);
  CHECK(aug.plan.first_row == 1);
  CHECK(aug.plan.num_rows == 3);
  CHECK(aug.plan.offset == bank.vector(2));

  // hand case: content embedding (1,1) with o_2 = (0,3) lands at (1,4)
  const std::vector<int> one{3};
  AugmentedInput single = augment_input(one, 2, &bank, tags, policy, rng);
  Matrix e(2, 2);
  e << 9, 9, 1, 1;  // row 0 is the tag position
  const Matrix shifted = apply_offsets(Tensor(e), single.plan, Placement::emb).value();
  CHECK(shifted(1, 0) == 1.0);
  CHECK(shifted(1, 1) == 4.0);
  CHECK(shifted.row(0) == e.row(0));  // tag position receives no offset
}

TEST_CASE("augment_input validates its inputs") {
  DistinctVectorBank bank = axis_bank(1.0);
  PseudoTagSet tags = two_tags();
  AugmentationPolicy policy;
  Rng rng(1);
  const std::vector<int> ids{3};
  CHECK_THROWS_AS(augment_input(ids, 3, &bank, tags, policy, rng), IndexError);
  CHECK_THROWS_AS(augment_input(ids, 0, &bank, tags, policy, rng), IndexError);
  CHECK_THROWS_AS(augment_input(std::vector<int>{}, 1, &bank, tags, policy, rng),
                  ShapeError);
}

TEST_CASE("tags-only ablation plans nothing") {
  DistinctVectorBank bank = axis_bank(3.0);
  PseudoTagSet tags = two_tags();
  AugmentationPolicy policy;
  policy.ablation = Ablation::tags_only;
  Rng rng(1);
  const std::vector<int> ids{3, 4};
  AugmentedInput aug = augment_input(ids, 1, &bank, tags, policy, rng);
  CHECK(aug.ids == std::vector<int>{10, 3, 4});
  CHECK_FALSE(aug.plan.active);
  Tensor x(Matrix::Ones(3, 2));
  CHECK(apply_offsets(x, aug.plan, Placement::emb).node() == x.node());
}

TEST_CASE("shuffled and noise ablations keep ids, change only the plan") {
  DistinctVectorBank bank = DistinctVectorBank::orthogonal(2, 8, 2.0, Rng(5));
  PseudoTagSet tags = two_tags();
  const std::vector<int> ids{3, 4, 5};

  AugmentationPolicy full;
  full.scale = 2.0;
  Rng r1(7);
  AugmentedInput base = augment_input(ids, 1, &bank, tags, full, r1);

  AugmentationPolicy shuffled;
  shuffled.ablation = Ablation::shuffled_correspondence;
  shuffled.scale = 2.0;
  std::bitset<2> seen;
  for (int trial = 0; trial < 40; ++trial) {
    Rng r(1000 + trial);
    AugmentedInput aug = augment_input(ids, 1, &bank, tags, shuffled, r);
    CHECK(aug.ids == base.ids);
    if (aug.plan.offset == bank.vector(1)) seen.set(0);
    if (aug.plan.offset == bank.vector(2)) seen.set(1);
  }
  CHECK(seen.all());  // the correspondence really is redrawn

  AugmentationPolicy noise;
  noise.ablation = Ablation::random_noise;
  noise.scale = 2.0;
  Rng r2(9);
  AugmentedInput n1 = augment_input(ids, 1, &bank, tags, noise, r2);
  AugmentedInput n2 = augment_input(ids, 1, &bank, tags, noise, r2);
  CHECK(n1.ids == base.ids);
  CHECK(n1.plan.offset != n2.plan.offset);  // fresh vector per invocation
  CHECK(n1.plan.offset.norm() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(n2.plan.offset.norm() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("zero scale makes augmentation a bitwise no-op on the forward") {
  const int vocab = 12;
  Model m(tiny_config(vocab, 8), TaskHead{HeadKind::classification, 2},
          tiny_layout(vocab, 2), 21);
  DistinctVectorBank bank = DistinctVectorBank::orthogonal(2, 8, 0.0, Rng(2));
  PseudoTagSet tags{2, {10, 11}};
  const std::vector<int> ids{3, 4, 5};

  AugmentationPolicy full;
  full.scale = 0.0;
  AugmentationPolicy tags_only;
  tags_only.ablation = Ablation::tags_only;

  Rng r(1);
  AugmentedInput with_offsets = augment_input(ids, 2, &bank, tags, full, r);
  AugmentedInput bare = augment_input(ids, 2, &bank, tags, tags_only, r);

  const Matrix a =
      m.predict(m.encode(apply_offsets(m.embed(with_offsets.ids), with_offsets.plan,
                                       Placement::emb)))
          .value();
  const Matrix b = m.predict(m.encode(m.embed(bare.ids))).value();
  CHECK(a == b);
}

TEST_CASE("offsets are constants: no gradient reaches the bank") {
  const int vocab = 12;
  Model m(tiny_config(vocab, 8), TaskHead{HeadKind::classification, 2},
          tiny_layout(vocab, 2), 22);
  DistinctVectorBank bank = DistinctVectorBank::orthogonal(2, 8, 3.0, Rng(2));
  Tensor& bank_param =
      m.params().add("distinct_vectors", bank.vectors, /*trainable=*/false);
  PseudoTagSet tags{2, {10, 11}};
  AugmentationPolicy policy;
  policy.scale = 3.0;
  Rng r(1);
  AugmentedInput aug = augment_input(std::vector<int>{3, 4}, 1, &bank, tags, policy, r);

  m.params().zero_grad();
  Tensor h = m.encode(apply_offsets(m.embed(aug.ids), aug.plan, Placement::emb));
  const std::vector<int> target{0};
  cross_entropy_smoothed(m.head_logits(h), target, 0.0).backward();

  CHECK_FALSE(bank_param.has_grad());
  CHECK(m.params().at("embeddings").tensor.has_grad());
}

TEST_CASE("emb and hidden placements produce different logits") {
  const int vocab = 12;
  DistinctVectorBank bank = DistinctVectorBank::orthogonal(2, 8, 3.0, Rng(4));
  PseudoTagSet tags{2, {10, 11}};
  const std::vector<int> ids{3, 4, 5};
  Rng r(1);

  auto run = [&](const Model& m, Placement placement) {
    AugmentationPolicy policy;
    policy.placement = placement;
    policy.scale = 3.0;
    AugmentedInput aug = augment_input(ids, 1, &bank, tags, policy, r);
    Tensor e = apply_offsets(m.embed(aug.ids), aug.plan, Placement::emb);
    Tensor h = apply_offsets(m.encode(e), aug.plan, Placement::hidden);
    return m.head_logits(h).value();
  };

  Model cls(tiny_config(vocab, 8), TaskHead{HeadKind::classification, 2},
            tiny_layout(vocab, 2), 23);
  CHECK(run(cls, Placement::emb) != run(cls, Placement::hidden));

  // With a token head every placement is visible at the output, so the
  // three arms separate pairwise.
  Model tok(tiny_config(vocab, 8), TaskHead{HeadKind::token_labeling, 3},
            tiny_layout(vocab, 2), 23);
  const Matrix emb_logits = run(tok, Placement::emb);
  const Matrix hidden_logits = run(tok, Placement::hidden);
  const Matrix both_logits = run(tok, Placement::emb_plus_hidden);
  CHECK(emb_logits != hidden_logits);
  CHECK(both_logits != emb_logits);
  CHECK(both_logits != hidden_logits);
}

TEST_CASE("offset addition commutes with a linear map") {
  Rng rng(31);
  const Matrix w = random_matrix(8, 4, rng);
  const Matrix e = random_matrix(5, 8, rng);
  DistinctVectorBank bank = DistinctVectorBank::orthogonal(3, 8, 2.0, Rng(6));

  OffsetPlan plan;
  plan.active = true;
  plan.first_row = 1;
  plan.num_rows = 4;
  plan.offset = bank.vector(2);
  plan.placement = Placement::emb;

  Matrix offsets = Matrix::Zero(5, 8);
  offsets.middleRows(1, 4).rowwise() = RowVector(bank.vector(2));

  const Matrix lhs = matmul(apply_offsets(Tensor(e), plan, Placement::emb), Tensor(w)).value();
  const Matrix rhs = (e * w) + (offsets * w);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("expand_for_inference builds one input per virtual model") {
  DistinctVectorBank bank = DistinctVectorBank::orthogonal(9, 16, 1.0, Rng(7));
  PseudoTagSet tags{9, {20, 21, 22, 23, 24, 25, 26, 27, 28}};
  AugmentationPolicy policy;
  policy.scale = 1.0;
  Rng r(1);

  const std::vector<int> one_token{3};
  CHECK(expand_for_inference(one_token, 1, &bank, tags, policy, r).size() == 1);

  std::vector<int> sentence(10, 4);
  auto expanded = expand_for_inference(sentence, 9, &bank, tags, policy, r);
  CHECK(expanded.size() == 9);
  for (int k = 0; k < 9; ++k) {
    CHECK(expanded[static_cast<std::size_t>(k)].ids.size() == 11);
    CHECK(expanded[static_cast<std::size_t>(k)].ids.front() == 20 + k);
    CHECK(expanded[static_cast<std::size_t>(k)].plan.offset == bank.vector(k + 1));
    // identical apart from the tag id and offset
    for (std::size_t t = 1; t < 11; ++t) {
      CHECK(expanded[static_cast<std::size_t>(k)].ids[t] == 4);
    }
  }
}

TEST_CASE("bank text export writes K lines") {
  DistinctVectorBank bank = DistinctVectorBank::orthogonal(3, 4, 1.5, Rng(8));
  std::ostringstream os;
  write_bank_text(bank, os);
  const std::string text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
