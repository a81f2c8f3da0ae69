#include <gtest/gtest.h>

#include <cmath>

#include "protaugment/protonet.hpp"
#include "test_support.hpp"

namespace protaugment {
namespace {

using testing::random_episode;
using testing::random_params;
using testing::word_vocab;

// 32-dim Sylvester-Hadamard row; distinct rows differ in exactly 16 signs.
double hadamard(std::size_t row, std::size_t col) { return (__builtin_popcountll(row & col) % 2) ? -1.0 : 1.0; }

// Encoder that maps the keyword "k<c>" to tanh(scale * H_c), with identity
// projection and zero bias. Every other token has a zero embedding.
EncoderParams keyword_encoder(const Vocabulary& vocab, std::size_t n_classes, double scale) {
  EncoderParams p({vocab.size(), 32, 32});
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto row = p.embedding_row(vocab.index_of("k" + std::to_string(c)));
    for (std::size_t j = 0; j < 32; ++j) row[j] = scale * hadamard(c + 1, j);
  }
  auto w = p.projection();
  for (std::size_t i = 0; i < 32; ++i) w[i * 32 + i] = 1.0;
  return p;
}

TEST(Prototypes, Means) {
  const Prototypes single = compute_prototypes({{Vector{0.3, -1.0}}});
  EXPECT_EQ(single.vectors[0], (Vector{0.3, -1.0}));
  const Prototypes mean = compute_prototypes({{Vector{1, 0}, Vector{0, 1}}});
  EXPECT_EQ(mean.vectors[0], (Vector{0.5, 0.5}));
  const Prototypes permuted = compute_prototypes({{Vector{0, 1}, Vector{1, 0}}});
  EXPECT_EQ(permuted.vectors[0], mean.vectors[0]);
  EXPECT_THROW(compute_prototypes({{Vector{1.0}}, {}}), std::invalid_argument);
}

TEST(Classify, NearestAndSymmetricCases) {
  const Prototypes p = compute_prototypes({{Vector{0, 0}}, {Vector{10, 10}}, {Vector{-10, 5}}});
  EXPECT_EQ(argmax(classify(Vector{0, 0}, p, DistanceKind::kSquaredEuclidean)), 0u);
  const Prototypes two = compute_prototypes({{Vector{1, 0}}, {Vector{-1, 0}}});
  const Vector probs = classify(Vector{0, 3}, two, DistanceKind::kSquaredEuclidean);
  EXPECT_NEAR(probs[0], 0.5, 1e-15);
  EXPECT_NEAR(probs[1], 0.5, 1e-15);
  // Squared distances 0 and ln 2.
  const Prototypes ln2 = compute_prototypes({{Vector{0.0}}, {Vector{std::sqrt(std::log(2.0))}}});
  const Vector q = classify(Vector{0.0}, ln2, DistanceKind::kSquaredEuclidean);
  EXPECT_NEAR(q[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(q[1], 1.0 / 3.0, 1e-12);
  EXPECT_THROW(classify(Vector{0.0, 1.0}, ln2, DistanceKind::kSquaredEuclidean), std::invalid_argument);
}

TEST(Classify, PermutingPrototypesPermutesOutput) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<Vector>> groups;
    for (int c = 0; c < 5; ++c) groups.push_back({testing::random_vector(rng, 6)});
    const Vector query = testing::random_vector(rng, 6);
    std::vector<std::size_t> perm{0, 1, 2, 3, 4};
    shuffle_in_place(perm, rng);
    std::vector<std::vector<Vector>> permuted;
    for (std::size_t i : perm) permuted.push_back(groups[i]);
    const Vector a = classify(query, compute_prototypes(groups), DistanceKind::kSquaredEuclidean);
    const Vector b = classify(query, compute_prototypes(permuted), DistanceKind::kSquaredEuclidean);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(b[i], a[perm[i]], 1e-15);
  }
}

TEST(Argmax, TiesGoToLowestIndex) { EXPECT_EQ(argmax(Vector{0.2, 0.4, 0.4}), 1u); }

TEST(SupervisedLoss, CollapsedEncoderGivesLogC) {
  Rng rng(2);
  const Vocabulary vocab = word_vocab(10);
  const Episode ep = random_episode(rng, 5, 2, 3, 10);
  const EncoderParams zero({vocab.size(), 4, 4});
  EXPECT_NEAR(supervised_episode_loss_value(ep, zero, vocab, DistanceKind::kSquaredEuclidean), std::log(5.0),
              1e-12);
}

TEST(SupervisedLoss, PerfectSeparationGivesNearZero) {
  Vocabulary vocab;
  for (int c = 0; c < 5; ++c) vocab.add("k" + std::to_string(c));
  const EncoderParams p = keyword_encoder(vocab, 5, 20.0);
  Episode ep;
  ep.shots = 1;
  for (std::size_t c = 0; c < 5; ++c) {
    const Tokens t{"k" + std::to_string(c)};
    ep.classes.push_back("c" + std::to_string(c));
    ep.support.push_back({t[0], t, c});
    ep.query.push_back({t[0], t, c});
  }
  EXPECT_LT(supervised_episode_loss_value(ep, p, vocab, DistanceKind::kSquaredEuclidean), 1e-20);
}

TEST(SupervisedLoss, NonNegativeOnRandomEpisodes) {
  Rng rng(3);
  const Vocabulary vocab = word_vocab(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Episode ep = random_episode(rng, 2 + uniform_index(rng, 4), 1 + uniform_index(rng, 2), 2, 12);
    const EncoderParams p = random_params(rng, {vocab.size(), 6, 6}, 2.0);
    EXPECT_GE(supervised_episode_loss_value(ep, p, vocab, DistanceKind::kSquaredEuclidean), 0.0);
  }
}

TEST(SupervisedLoss, ValueMatchesGradientPath) {
  Rng rng(4);
  const Vocabulary vocab = word_vocab(8);
  const Episode ep = random_episode(rng, 3, 2, 2, 8);
  const EncoderParams p = random_params(rng, {vocab.size(), 5, 5});
  EXPECT_DOUBLE_EQ(supervised_episode_loss(ep, p, vocab, DistanceKind::kSquaredEuclidean).loss,
                   supervised_episode_loss_value(ep, p, vocab, DistanceKind::kSquaredEuclidean));
}

TEST(SupervisedLoss, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  const Vocabulary vocab = word_vocab(8);
  for (DistanceKind kind : {DistanceKind::kSquaredEuclidean, DistanceKind::kCosine}) {
    for (int trial = 0; trial < 15; ++trial) {
      const std::size_t c = 2 + uniform_index(rng, 4);
      const Episode ep = random_episode(rng, c, 1 + uniform_index(rng, 2), 1 + uniform_index(rng, 2), 8);
      const EncoderShape shape{vocab.size(), 1 + uniform_index(rng, 8), 1 + uniform_index(rng, 8)};
      EncoderParams p = random_params(rng, shape);
      const LossAndGrads analytic = supervised_episode_loss(ep, p, vocab, kind);
      auto loss = [&](std::span<const double> x) {
        EncoderParams q(shape);
        std::copy(x.begin(), x.end(), q.values().begin());
        return supervised_episode_loss_value(ep, q, vocab, kind);
      };
      const Vector numeric = finite_difference_gradient(loss, p.values(), 1e-5);
      EXPECT_LT(compare_gradients(analytic.grads.values(), numeric).max_relative_error, 1e-4);
    }
  }
}

TEST(PrototypeLoss, GradientReachesSupportMembers) {
  Rng rng(6);
  const std::vector<Vector> queries{testing::random_vector(rng, 3), testing::random_vector(rng, 3)};
  const std::vector<std::size_t> targets{0, 1};
  const std::vector<std::vector<Vector>> groups{{testing::random_vector(rng, 3), testing::random_vector(rng, 3)},
                                                {testing::random_vector(rng, 3)}};
  const PrototypeLossResult r = prototype_loss(queries, targets, groups, DistanceKind::kSquaredEuclidean);
  // Flatten queries then members and compare to central differences.
  Vector flat;
  for (const auto& q : queries) flat.insert(flat.end(), q.begin(), q.end());
  for (const auto& g : groups) {
    for (const auto& m : g) flat.insert(flat.end(), m.begin(), m.end());
  }
  auto loss = [&](std::span<const double> x) {
    std::vector<Vector> qs{Vector(x.begin(), x.begin() + 3), Vector(x.begin() + 3, x.begin() + 6)};
    std::vector<std::vector<Vector>> gs{{Vector(x.begin() + 6, x.begin() + 9), Vector(x.begin() + 9, x.begin() + 12)},
                                        {Vector(x.begin() + 12, x.begin() + 15)}};
    return prototype_loss(qs, targets, gs, DistanceKind::kSquaredEuclidean).loss;
  };
  Vector analytic;
  for (const auto& q : r.query_grads) analytic.insert(analytic.end(), q.begin(), q.end());
  for (const auto& g : r.member_grads) {
    for (const auto& m : g) analytic.insert(analytic.end(), m.begin(), m.end());
  }
  const Vector numeric = finite_difference_gradient(loss, flat, 1e-5);
  EXPECT_LT(compare_gradients(analytic, numeric).max_relative_error, 1e-4);
  double member_norm = 0.0;
  for (std::size_t i = 6; i < analytic.size(); ++i) member_norm += std::abs(analytic[i]);
  EXPECT_GT(member_norm, 0.0);
}

Dataset keyword_dataset(std::size_t n_classes, std::size_t per_class) {
  std::vector<Record> records;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::string text = "k" + std::to_string(c) + " filler" + std::to_string(i % 3);
      records.push_back({text, "c" + std::to_string(c), tokenize(text)});
    }
  }
  return Dataset(std::move(records), {});
}

TEST(Evaluate, OracleEncoderIsPerfect) {
  const Dataset d = keyword_dataset(20, 8);
  Vocabulary vocab;
  for (const auto& r : d.records()) {
    for (const auto& t : r.tokens) vocab.add(t);
  }
  const EncoderParams p = keyword_encoder(vocab, 20, 5.0);
  const ClassSplit split = split_classes(d, {}, 0, false);
  Rng rng(7);
  const EvalResult r = evaluate(p, vocab, d, split, SplitPart::kTest, {5, 1, 5, 0}, 100, rng);
  EXPECT_EQ(r.mean_accuracy, 1.0);
  EXPECT_EQ(r.episode_count, 100u);
}

TEST(Evaluate, CollapsedEncoderIsAtChanceAndParamsUntouched) {
  const Dataset d = keyword_dataset(20, 8);
  Vocabulary vocab;
  for (const auto& r : d.records()) {
    for (const auto& t : r.tokens) vocab.add(t);
  }
  const EncoderParams p({vocab.size(), 8, 8});
  const EncoderParams before = p;
  const ClassSplit split = split_classes(d, {}, 0, false);
  Rng rng(8);
  const EvalResult r = evaluate(p, vocab, d, split, SplitPart::kValid, {5, 1, 5, 0}, 600, rng);
  EXPECT_NEAR(r.mean_accuracy, 0.2, 0.03);
  EXPECT_EQ(r.per_episode_accuracies.size(), 600u);
  EXPECT_EQ(p, before);
}

// Keyword classes with shared fillers: unseen validation keywords still get
// distinct random embeddings, so a trained projection separates them.
TEST(Training, SeparableCorpusIsLearnable) {
  const Dataset d = keyword_dataset(10, 12);
  Vocabulary vocab;
  for (const auto& r : d.records()) {
    for (const auto& t : r.tokens) vocab.add(t);
  }
  const ClassSplit split = split_classes(d, {0.4, 0.3, 0.3}, 1, false);
  Rng rng(9);
  EncoderParams p = init_encoder({vocab.size(), 32, 32}, rng);
  AdamOptimizer opt({1e-3, 0.9, 0.999, 1e-8}, p.shape());
  double best = 0.0;
  for (int step = 1; step <= 2000; ++step) {
    const Episode ep = sample_episode(d, split, SplitPart::kTrain, {3, 1, 5, 0}, rng);
    opt.step(p, supervised_episode_loss(ep, p, vocab, DistanceKind::kSquaredEuclidean).grads);
    if (step % 500 == 0) {
      Rng eval_rng(10);
      best = std::max(best, evaluate(p, vocab, d, split, SplitPart::kValid, {3, 1, 5, 0}, 200, eval_rng).mean_accuracy);
    }
  }
  EXPECT_GE(best, 0.95);
}

}  // namespace
}  // namespace protaugment
