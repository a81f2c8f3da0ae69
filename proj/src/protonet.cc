#include "protaugment/protonet.hpp"

#include <stdexcept>

namespace protaugment {

Prototypes compute_prototypes(const std::vector<std::vector<Vector>>& grouped_embeddings,
                              std::vector<std::string> class_names) {
  if (!class_names.empty() && class_names.size() != grouped_embeddings.size()) {
    throw std::invalid_argument("compute_prototypes: class name count does not match groups");
  }
  Prototypes out;
  out.classes = std::move(class_names);
  std::size_t dim = 0;
  for (std::size_t c = 0; c < grouped_embeddings.size(); ++c) {
    const auto& group = grouped_embeddings[c];
    if (group.empty()) throw std::invalid_argument("compute_prototypes: class " + std::to_string(c) + " is empty");
    if (c == 0) dim = group.front().size();
    Vector mean(dim, 0.0);
    for (const auto& e : group) {
      if (e.size() != dim) throw std::invalid_argument("compute_prototypes: dimension mismatch");
      for (std::size_t k = 0; k < dim; ++k) mean[k] += e[k];
    }
    const double inv = 1.0 / static_cast<double>(group.size());
    for (double& v : mean) v *= inv;
    out.vectors.push_back(std::move(mean));
  }
  return out;
}

Vector classify(std::span<const double> query, const Prototypes& prototypes, DistanceKind kind) {
  Vector dists;
  dists.reserve(prototypes.vectors.size());
  for (const auto& p : prototypes.vectors) dists.push_back(distance(kind, query, p));
  return softmax_over_neg_distances(dists);
}

std::size_t argmax(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

PrototypeLossResult prototype_loss(std::span<const Vector> queries, std::span<const std::size_t> targets,
                                   const std::vector<std::vector<Vector>>& groups, DistanceKind kind) {
  if (queries.size() != targets.size()) throw std::invalid_argument("prototype_loss: targets/queries mismatch");
  if (queries.empty()) throw std::invalid_argument("prototype_loss: no query points");
  const Prototypes protos = compute_prototypes(groups);
  const std::size_t dim = protos.vectors.front().size();

  PrototypeLossResult out;
  out.query_grads.assign(queries.size(), Vector(dim, 0.0));
  std::vector<Vector> proto_grads(groups.size(), Vector(dim, 0.0));
  const double inv_q = 1.0 / static_cast<double>(queries.size());

  for (std::size_t i = 0; i < queries.size(); ++i) {
    Vector dists;
    dists.reserve(groups.size());
    for (const auto& p : protos.vectors) dists.push_back(distance(kind, queries[i], p));
    const Vector probs = softmax_over_neg_distances(dists);
    out.loss += cross_entropy(probs, targets[i]) * inv_q;
    const Vector d_dists = cross_entropy_grad_wrt_distances(probs, targets[i]);
    for (std::size_t c = 0; c < groups.size(); ++c) {
      if (d_dists[c] == 0.0) continue;
      distance_backward(kind, queries[i], protos.vectors[c], d_dists[c] * inv_q, out.query_grads[i],
                        proto_grads[c]);
    }
  }

  out.member_grads.resize(groups.size());
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const double inv_k = 1.0 / static_cast<double>(groups[c].size());
    Vector share = proto_grads[c];
    for (double& v : share) v *= inv_k;
    out.member_grads[c].assign(groups[c].size(), share);
  }
  return out;
}

namespace {

struct EncodedEpisode {
  std::vector<std::vector<EncodeTrace>> support;  // per class
  std::vector<EncodeTrace> query;
  std::vector<std::size_t> targets;
};

EncodedEpisode encode_episode(const Episode& episode, const EncoderParams& params, const Vocabulary& vocab) {
  EncodedEpisode enc;
  enc.support.resize(episode.classes.size());
  for (const auto& s : episode.support) {
    if (s.label >= episode.classes.size()) throw std::invalid_argument("support label outside episode classes");
    enc.support[s.label].push_back(encode_ids(params, vocab.lookup(s.tokens)));
  }
  for (const auto& q : episode.query) {
    if (q.label >= episode.classes.size()) throw std::invalid_argument("query label outside episode classes");
    enc.query.push_back(encode_ids(params, vocab.lookup(q.tokens)));
    enc.targets.push_back(q.label);
  }
  return enc;
}

std::vector<std::vector<Vector>> outputs_of(const std::vector<std::vector<EncodeTrace>>& traces) {
  std::vector<std::vector<Vector>> out(traces.size());
  for (std::size_t c = 0; c < traces.size(); ++c) {
    for (const auto& t : traces[c]) out[c].push_back(t.output);
  }
  return out;
}

std::vector<Vector> outputs_of(const std::vector<EncodeTrace>& traces) {
  std::vector<Vector> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(t.output);
  return out;
}

}  // namespace

LossAndGrads supervised_episode_loss(const Episode& episode, const EncoderParams& params,
                                     const Vocabulary& vocab, DistanceKind kind) {
  const EncodedEpisode enc = encode_episode(episode, params, vocab);
  const auto result = prototype_loss(outputs_of(enc.query), enc.targets, outputs_of(enc.support), kind);
  LossAndGrads out{result.loss, EncoderGrads(params.shape())};
  for (std::size_t i = 0; i < enc.query.size(); ++i) {
    accumulate_encode_backward(params, enc.query[i], result.query_grads[i], out.grads);
  }
  for (std::size_t c = 0; c < enc.support.size(); ++c) {
    for (std::size_t k = 0; k < enc.support[c].size(); ++k) {
      accumulate_encode_backward(params, enc.support[c][k], result.member_grads[c][k], out.grads);
    }
  }
  return out;
}

double supervised_episode_loss_value(const Episode& episode, const EncoderParams& params,
                                     const Vocabulary& vocab, DistanceKind kind) {
  const EncodedEpisode enc = encode_episode(episode, params, vocab);
  return prototype_loss(outputs_of(enc.query), enc.targets, outputs_of(enc.support), kind).loss;
}

double episode_accuracy(const Episode& episode, const EncoderParams& params, const Vocabulary& vocab,
                        DistanceKind kind) {
  const EncodedEpisode enc = encode_episode(episode, params, vocab);
  const Prototypes protos = compute_prototypes(outputs_of(enc.support));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < enc.query.size(); ++i) {
    if (argmax(classify(enc.query[i].output, protos, kind)) == enc.targets[i]) ++correct;
  }
  return enc.query.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(enc.query.size());
}

EvalResult evaluate(const EncoderParams& params, const Vocabulary& vocab, const Dataset& dataset,
                    const ClassSplit& split, SplitPart part, EpisodeShape shape, std::size_t n_episodes,
                    Rng& rng, DistanceKind kind) {
  shape.unlabeled = 0;
  EvalResult result;
  result.per_episode_accuracies.reserve(n_episodes);
  double total = 0.0;
  for (std::size_t e = 0; e < n_episodes; ++e) {
    const Episode ep = sample_episode(dataset, split, part, shape, rng);
    const double acc = episode_accuracy(ep, params, vocab, kind);
    result.per_episode_accuracies.push_back(acc);
    total += acc;
  }
  result.episode_count = n_episodes;
  result.mean_accuracy = n_episodes == 0 ? 0.0 : total / static_cast<double>(n_episodes);
  return result;
}

}  // namespace protaugment
