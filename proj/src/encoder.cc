#include "protaugment/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace protaugment {

Vocabulary::Vocabulary() { add(std::string(kUnkToken)); }

TokenIndex Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const auto idx = static_cast<TokenIndex>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, idx);
  return idx;
}

TokenIndex Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return index_.count(token) > 0; }

const std::string& Vocabulary::token(TokenIndex index) const { return tokens_.at(index); }

std::vector<TokenIndex> Vocabulary::lookup(std::span<const std::string> tokens) const {
  std::vector<TokenIndex> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index_of(t));
  return ids;
}

ParameterBlock& ParameterBlock::operator+=(const ParameterBlock& other) {
  if (!(shape_ == other.shape_)) throw std::invalid_argument("parameter block shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ParameterBlock& ParameterBlock::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

EncoderParams init_encoder(EncoderShape shape, Rng& rng) {
  EncoderParams params(shape);
  for (std::size_t t = 0; t < shape.vocab_size; ++t) {
    for (double& v : params.embedding_row(t)) v = (2.0 * uniform01(rng) - 1.0) * 0.1;
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.embed_dim));
  for (double& v : params.projection()) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return params;
}

EncodeTrace encode_ids(const EncoderParams& params, std::vector<TokenIndex> ids) {
  const auto& shape = params.shape();
  if (ids.empty()) ids.push_back(Vocabulary::kUnk);
  EncodeTrace trace;
  trace.ids = std::move(ids);
  trace.pooled.assign(shape.embed_dim, 0.0);
  for (TokenIndex id : trace.ids) {
    if (id >= shape.vocab_size) throw std::out_of_range("encode: token index outside embedding table");
    auto row = params.embedding_row(id);
    for (std::size_t k = 0; k < shape.embed_dim; ++k) trace.pooled[k] += row[k];
  }
  const double inv_n = 1.0 / static_cast<double>(trace.ids.size());
  for (double& v : trace.pooled) v *= inv_n;

  auto weights = params.projection();
  auto bias = params.bias();
  trace.output.resize(shape.output_dim);
  for (std::size_t r = 0; r < shape.output_dim; ++r) {
    double z = bias[r];
    const double* w = weights.data() + r * shape.embed_dim;
    for (std::size_t k = 0; k < shape.embed_dim; ++k) z += w[k] * trace.pooled[k];
    trace.output[r] = std::tanh(z);
  }
  return trace;
}

EncodeTrace encode_traced(const EncoderParams& params, std::span<const std::string> tokens,
                          const Vocabulary& vocab) {
  return encode_ids(params, vocab.lookup(tokens));
}

Vector encode(const EncoderParams& params, std::span<const std::string> tokens, const Vocabulary& vocab) {
  return encode_traced(params, tokens, vocab).output;
}

void accumulate_encode_backward(const EncoderParams& params, const EncodeTrace& trace,
                                std::span<const double> upstream, EncoderGrads& grads) {
  const auto& shape = params.shape();
  if (upstream.size() != shape.output_dim) {
    throw std::invalid_argument("encode_backward: upstream gradient has dimension " +
                                std::to_string(upstream.size()) + ", expected " +
                                std::to_string(shape.output_dim));
  }
  if (!(grads.shape() == shape)) throw std::invalid_argument("encode_backward: gradient shape mismatch");

  auto weights = params.projection();
  auto grad_w = grads.projection();
  auto grad_b = grads.bias();
  Vector grad_pooled(shape.embed_dim, 0.0);
  for (std::size_t r = 0; r < shape.output_dim; ++r) {
    const double y = trace.output[r];
    const double gz = upstream[r] * (1.0 - y * y);
    if (gz == 0.0) continue;
    grad_b[r] += gz;
    const double* w = weights.data() + r * shape.embed_dim;
    double* gw = grad_w.data() + r * shape.embed_dim;
    for (std::size_t k = 0; k < shape.embed_dim; ++k) {
      gw[k] += gz * trace.pooled[k];
      grad_pooled[k] += gz * w[k];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(trace.ids.size());
  for (TokenIndex id : trace.ids) {
    auto row = grads.embedding_row(id);
    for (std::size_t k = 0; k < shape.embed_dim; ++k) row[k] += grad_pooled[k] * inv_n;
  }
}

EncoderGrads encode_backward(const EncoderParams& params, std::span<const std::string> tokens,
                             const Vocabulary& vocab, std::span<const double> upstream) {
  EncoderGrads grads(params.shape());
  accumulate_encode_backward(params, encode_traced(params, tokens, vocab), upstream, grads);
  return grads;
}

AdamOptimizer::AdamOptimizer(AdamConfig config, EncoderShape shape)
    : config_(config), m_(shape.parameter_count(), 0.0), v_(shape.parameter_count(), 0.0) {}

void AdamOptimizer::step(EncoderParams& params, const EncoderGrads& grads) {
  auto g = grads.values();
  if (g.size() != m_.size() || params.values().size() != m_.size()) {
    throw std::invalid_argument("optimizer_step: gradient shape does not match parameters");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw std::runtime_error("optimizer_step: non-finite gradient at parameter " + std::to_string(i));
    }
  }
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  auto theta = params.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * g[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * g[i] * g[i];
    const double m_hat = m_[i] / correction1;
    const double v_hat = v_[i] / correction2;
    theta[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'A', 'M', 'O', 'D', 'E', 'L', '1'};

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Vocabulary& vocab, const EncoderParams& params) {
  if (params.shape().vocab_size != vocab.size()) {
    throw std::invalid_argument("save_checkpoint: vocabulary size does not match embedding table");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof kMagic);
  write_u64(os, vocab.size());
  for (const auto& tok : vocab.tokens()) {
    write_u64(os, tok.size());
    os.write(tok.data(), static_cast<std::streamsize>(tok.size()));
  }
  const auto& shape = params.shape();
  write_u64(os, shape.vocab_size);
  write_u64(os, shape.embed_dim);
  write_u64(os, shape.output_dim);
  auto values = params.values();
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!os) throw std::runtime_error("failed writing checkpoint: " + path);
}

void load_checkpoint(const std::string& path, Vocabulary& vocab, EncoderParams& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("not a model checkpoint: " + path);
  }
  Vocabulary loaded_vocab;
  const std::uint64_t n_tokens = read_u64(is);
  for (std::uint64_t i = 0; i < n_tokens; ++i) {
    std::string tok(read_u64(is), '\0');
    is.read(tok.data(), static_cast<std::streamsize>(tok.size()));
    if (!is) throw std::runtime_error("checkpoint: truncated vocabulary");
    if (i == 0) {
      if (tok != Vocabulary::kUnkToken) throw std::runtime_error("checkpoint: first token must be <unk>");
      continue;
    }
    loaded_vocab.add(tok);
  }
  EncoderShape shape;
  shape.vocab_size = read_u64(is);
  shape.embed_dim = read_u64(is);
  shape.output_dim = read_u64(is);
  if (shape.vocab_size != loaded_vocab.size()) throw std::runtime_error("checkpoint: inconsistent vocabulary");
  EncoderParams loaded(shape);
  auto values = loaded.values();
  is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated parameters");
  vocab = std::move(loaded_vocab);
  params = std::move(loaded);
}

}  // namespace protaugment
