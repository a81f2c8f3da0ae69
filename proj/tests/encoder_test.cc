#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "protaugment/encoder.hpp"
#include "protaugment/numerics.hpp"
#include "test_support.hpp"

namespace protaugment {
namespace {

using testing::random_params;
using testing::word_vocab;

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("How long?"), (Tokens{"how", "long", "?"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("   \t ").empty());
  EXPECT_EQ(tokenize("can you play m3 file"), (Tokens{"can", "you", "play", "m3", "file"}));
  EXPECT_EQ(tokenize("Hi,there!!"), (Tokens{"hi", ",", "there", "!", "!"}));
}

TEST(Vocabulary, UnknownMapsToUnk) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 1u);
  const auto id = v.add("card");
  EXPECT_EQ(v.add("card"), id);
  EXPECT_EQ(v.index_of("card"), id);
  EXPECT_EQ(v.index_of("nope"), Vocabulary::kUnk);
  EXPECT_FALSE(v.contains("nope"));
}

TEST(Encode, ZeroParamsGiveZeroVector) {
  const Vocabulary vocab = word_vocab(5);
  const EncoderParams p({vocab.size(), 4, 3});
  for (double x : encode(p, Tokens{"w1", "w2"}, vocab)) EXPECT_EQ(x, 0.0);
}

TEST(Encode, RepeatedTokenEqualsSingleToken) {
  Rng rng(1);
  const Vocabulary vocab = word_vocab(5);
  const EncoderParams p = random_params(rng, {vocab.size(), 4, 3});
  EXPECT_EQ(encode(p, Tokens{"w2", "w2", "w2"}, vocab), encode(p, Tokens{"w2"}, vocab));
}

TEST(Encode, MatchesMatvecOracle) {
  Rng rng(2);
  const Vocabulary vocab = word_vocab(6);
  const EncoderShape shape{vocab.size(), 5, 4};
  const EncoderParams p = random_params(rng, shape);
  const Tokens sentence{"w0", "w3", "w5"};
  // Independent evaluation straight from the flat layout.
  const auto flat = p.values();
  std::vector<double> pooled(5, 0.0);
  for (const auto& t : sentence) {
    const std::size_t row = vocab.index_of(t);
    for (std::size_t j = 0; j < 5; ++j) pooled[j] += flat[row * 5 + j] / 3.0;
  }
  const std::size_t w_off = shape.vocab_size * 5;
  const std::size_t b_off = w_off + 4 * 5;
  const Vector out = encode(p, sentence, vocab);
  for (std::size_t i = 0; i < 4; ++i) {
    double z = flat[b_off + i];
    for (std::size_t j = 0; j < 5; ++j) z += flat[w_off + i * 5 + j] * pooled[j];
    EXPECT_NEAR(out[i], std::tanh(z), 1e-14);
  }
}

TEST(Encode, PermutationInvariantAndBounded) {
  Rng rng(3);
  const Vocabulary vocab = word_vocab(8);
  const EncoderParams p = random_params(rng, {vocab.size(), 6, 6}, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    Tokens s = testing::random_sentence(rng, 8, 6);
    const Vector a = encode(p, s, vocab);
    shuffle_in_place(s, rng);
    const Vector b = encode(p, s, vocab);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-14);
      EXPECT_GT(a[i], -1.0);
      EXPECT_LT(a[i], 1.0);
    }
  }
}

TEST(Encode, EmptySentenceIsUnk) {
  Rng rng(4);
  const Vocabulary vocab = word_vocab(3);
  const EncoderParams p = random_params(rng, {vocab.size(), 3, 3});
  EXPECT_EQ(encode(p, Tokens{}, vocab), encode(p, Tokens{"<unk>"}, vocab));
  EXPECT_EQ(encode(p, Tokens{}, vocab), encode(p, Tokens{"never-seen"}, vocab));
}

TEST(EncodeBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(5);
  const Vocabulary vocab = word_vocab(4);
  const EncoderParams p = random_params(rng, {vocab.size(), 3, 2});
  const EncoderGrads g = encode_backward(p, Tokens{"w1", "w2"}, vocab, Vector{0.0, 0.0});
  for (double x : g.values()) EXPECT_EQ(x, 0.0);
}

TEST(EncodeBackward, AbsentTokenRowIsZero) {
  Rng rng(6);
  const Vocabulary vocab = word_vocab(4);
  const EncoderParams p = random_params(rng, {vocab.size(), 3, 2});
  const EncoderGrads g = encode_backward(p, Tokens{"w1", "w2"}, vocab, Vector{0.7, -0.2});
  for (double x : g.embedding_row(vocab.index_of("w3"))) EXPECT_EQ(x, 0.0);
}

TEST(EncodeBackward, DimensionMismatchThrows) {
  const Vocabulary vocab = word_vocab(2);
  const EncoderParams p({vocab.size(), 3, 2});
  EXPECT_THROW(encode_backward(p, Tokens{"w1"}, vocab, Vector{1.0}), std::invalid_argument);
}

TEST(EncodeBackward, MatchesFiniteDifferences) {
  Rng rng(7);
  const Vocabulary vocab = word_vocab(6);
  for (int trial = 0; trial < 20; ++trial) {
    const EncoderShape shape{vocab.size(), 1 + uniform_index(rng, 8), 1 + uniform_index(rng, 8)};
    EncoderParams p = random_params(rng, shape);
    const Tokens s = testing::random_sentence(rng, 6, 5);
    const Vector up = testing::random_vector(rng, shape.output_dim);
    const EncoderGrads g = encode_backward(p, s, vocab, up);
    auto loss = [&](std::span<const double> x) {
      EncoderParams q(shape);
      std::copy(x.begin(), x.end(), q.values().begin());
      const Vector out = encode(q, s, vocab);
      double v = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) v += up[i] * out[i];
      return v;
    };
    const Vector numeric = finite_difference_gradient(loss, p.values(), 1e-5);
    EXPECT_LT(compare_gradients(g.values(), numeric).max_relative_error, 1e-4);
  }
}

TEST(Adam, ZeroGradientsLeaveParamsUnchanged) {
  Rng rng(8);
  const EncoderShape shape{3, 2, 2};
  EncoderParams p = random_params(rng, shape);
  const EncoderParams before = p;
  AdamOptimizer opt({}, shape);
  for (int i = 0; i < 3; ++i) opt.step(p, EncoderGrads(shape));
  EXPECT_EQ(p, before);
}

TEST(Adam, MatchesHandComputedUpdates) {
  const EncoderShape shape{1, 1, 1};  // three scalars: embedding, projection, bias
  EncoderParams p(shape);
  p.values()[2] = 0.5;
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  AdamOptimizer opt(cfg, shape);
  EncoderGrads g(shape);

  g.values()[2] = 0.2;
  opt.step(p, g);
  // m1 = 0.02, v1 = 4e-5, m_hat = 0.2, v_hat = 0.04
  const double step1 = 0.01 * 0.2 / (0.2 + 1e-8);
  EXPECT_NEAR(p.values()[2], 0.5 - step1, 1e-15);

  g.values()[2] = -0.4;
  opt.step(p, g);
  const double m2 = 0.9 * 0.02 + 0.1 * -0.4;
  const double v2 = 0.999 * 4e-5 + 0.001 * 0.16;
  const double m_hat = m2 / (1 - 0.81);
  const double v_hat = v2 / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p.values()[2], 0.5 - step1 - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-15);
  EXPECT_NEAR(opt.first_moment()[2], m2, 1e-15);
  EXPECT_NEAR(opt.second_moment()[2], v2, 1e-15);
  EXPECT_EQ(p.values()[0], 0.0);
  EXPECT_EQ(opt.steps_taken(), 2u);
}

TEST(Adam, NonFiniteGradientThrowsWithoutChangingState) {
  const EncoderShape shape{2, 2, 2};
  EncoderParams p(shape);
  AdamOptimizer opt({}, shape);
  EncoderGrads g(shape);
  g.values()[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(opt.step(p, g), std::runtime_error);
  EXPECT_EQ(opt.steps_taken(), 0u);
}

TEST(Adam, QuadraticLossDecreasesAfterWarmup) {
  const EncoderShape shape{2, 2, 2};
  Rng rng(9);
  EncoderParams p = random_params(rng, shape, 2.0);
  AdamOptimizer opt({0.05, 0.9, 0.999, 1e-8}, shape);
  auto loss = [&] {
    double s = 0.0;
    for (double x : p.values()) s += x * x;
    return s;
  };
  std::vector<double> history;
  for (int i = 0; i < 40; ++i) {
    EncoderGrads g(shape);
    for (std::size_t j = 0; j < g.values().size(); ++j) g.values()[j] = 2.0 * p.values()[j];
    opt.step(p, g);
    history.push_back(loss());
  }
  for (std::size_t i = 5; i < history.size(); ++i) EXPECT_LT(history[i], history[i - 1]);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(10);
  const Vocabulary vocab = word_vocab(7);
  const EncoderParams p = init_encoder({vocab.size(), 4, 3}, rng);
  const auto path = (std::filesystem::temp_directory_path() / "pa_encoder_test.ckpt").string();
  save_checkpoint(path, vocab, p);
  Vocabulary v2;
  EncoderParams p2;
  load_checkpoint(path, v2, p2);
  EXPECT_EQ(p2, p);
  EXPECT_EQ(v2.tokens(), vocab.tokens());
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path, v2, p2), std::runtime_error);
}

TEST(Init, SeededAndInRange) {
  Rng a(3), b(3);
  const EncoderShape shape{10, 16, 8};
  const EncoderParams pa = init_encoder(shape, a);
  EXPECT_EQ(pa, init_encoder(shape, b));
  for (std::size_t t = 0; t < 10; ++t) {
    for (double x : pa.embedding_row(t)) EXPECT_LE(std::abs(x), 0.1);
  }
  for (double x : pa.projection()) EXPECT_LE(std::abs(x), 1.0 / std::sqrt(16.0));
  for (double x : pa.bias()) EXPECT_EQ(x, 0.0);
}

}  // namespace
}  // namespace protaugment
