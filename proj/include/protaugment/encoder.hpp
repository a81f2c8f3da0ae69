#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "protaugment/numerics.hpp"
#include "protaugment/rng.hpp"

namespace protaugment {

using Tokens = std::vector<std::string>;

// Lowercases, splits on whitespace and detaches every ASCII punctuation
// character as its own token.
Tokens tokenize(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens);

using TokenIndex = std::uint32_t;

class Vocabulary {
 public:
  static constexpr TokenIndex kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  TokenIndex add(const std::string& token);
  TokenIndex index_of(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const;
  const std::string& token(TokenIndex index) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<TokenIndex> lookup(std::span<const std::string> tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenIndex> index_;
};

struct EncoderShape {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;
  std::size_t output_dim = 32;

  std::size_t parameter_count() const {
    return vocab_size * embed_dim + output_dim * embed_dim + output_dim;
  }
  bool operator==(const EncoderShape&) const = default;
};

// Flat storage laid out as [embedding table V x e | projection d x e | bias d].
class ParameterBlock {
 public:
  ParameterBlock() = default;
  explicit ParameterBlock(EncoderShape shape)
      : shape_(shape), values_(shape.parameter_count(), 0.0) {}

  const EncoderShape& shape() const { return shape_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> embedding_row(std::size_t token) {
    return std::span<double>(values_).subspan(token * shape_.embed_dim, shape_.embed_dim);
  }
  std::span<const double> embedding_row(std::size_t token) const {
    return std::span<const double>(values_).subspan(token * shape_.embed_dim, shape_.embed_dim);
  }
  std::span<double> projection() {
    return std::span<double>(values_).subspan(projection_offset(), shape_.output_dim * shape_.embed_dim);
  }
  std::span<const double> projection() const {
    return std::span<const double>(values_).subspan(projection_offset(),
                                                    shape_.output_dim * shape_.embed_dim);
  }
  std::span<double> bias() {
    return std::span<double>(values_).subspan(bias_offset(), shape_.output_dim);
  }
  std::span<const double> bias() const {
    return std::span<const double>(values_).subspan(bias_offset(), shape_.output_dim);
  }

  void set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }
  ParameterBlock& operator+=(const ParameterBlock& other);
  ParameterBlock& operator*=(double scale);

  bool operator==(const ParameterBlock&) const = default;

 private:
  std::size_t projection_offset() const { return shape_.vocab_size * shape_.embed_dim; }
  std::size_t bias_offset() const { return projection_offset() + shape_.output_dim * shape_.embed_dim; }

  EncoderShape shape_;
  std::vector<double> values_;
};

// The trainable state of the sentence encoder, and gradients with the same layout.
using EncoderParams = ParameterBlock;
using EncoderGrads = ParameterBlock;

// Embeddings ~ U(-0.1, 0.1), projection ~ U(-1/sqrt(e), 1/sqrt(e)), bias zero.
EncoderParams init_encoder(EncoderShape shape, Rng& rng);

// Forward intermediates retained for the backward pass.
struct EncodeTrace {
  std::vector<TokenIndex> ids;
  Vector pooled;
  Vector output;
};

EncodeTrace encode_ids(const EncoderParams& params, std::vector<TokenIndex> ids);

// tanh(W mean(E[tokens]) + b). Empty input encodes as a lone <unk>.
Vector encode(const EncoderParams& params, std::span<const std::string> tokens, const Vocabulary& vocab);
EncodeTrace encode_traced(const EncoderParams& params, std::span<const std::string> tokens,
                          const Vocabulary& vocab);

// Accumulates d(upstream . output)/d(params) into grads.
void accumulate_encode_backward(const EncoderParams& params, const EncodeTrace& trace,
                                std::span<const double> upstream, EncoderGrads& grads);

EncoderGrads encode_backward(const EncoderParams& params, std::span<const std::string> tokens,
                             const Vocabulary& vocab, std::span<const double> upstream);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer(AdamConfig config, EncoderShape shape);

  // Throws on non-finite or mis-shaped gradients before touching any state.
  void step(EncoderParams& params, const EncoderGrads& grads);

  std::uint64_t steps_taken() const { return step_; }
  const AdamConfig& config() const { return config_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t step_ = 0;
};

// Binary checkpoint: vocabulary followed by every parameter as raw IEEE doubles.
void save_checkpoint(const std::string& path, const Vocabulary& vocab, const EncoderParams& params);
void load_checkpoint(const std::string& path, Vocabulary& vocab, EncoderParams& params);

}  // namespace protaugment
