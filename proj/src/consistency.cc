#include "protaugment/consistency.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace protaugment {

void UnlabeledBatch::validate() const {
  if (sentences.empty()) throw std::invalid_argument("unlabeled batch is empty");
  if (paraphrases.size() != sentences.size()) {
    throw std::invalid_argument("unlabeled batch: paraphrase lists do not match sentences");
  }
  const std::size_t m = paraphrases.front().size();
  if (m == 0) throw std::invalid_argument("unlabeled batch: sentences need at least one paraphrase");
  for (const auto& p : paraphrases) {
    if (p.size() != m) throw std::invalid_argument("unlabeled batch: ragged paraphrase lists");
  }
}

Prototypes unlabeled_prototypes(const std::vector<std::vector<Vector>>& paraphrase_embeddings) {
  if (paraphrase_embeddings.empty()) throw std::invalid_argument("unlabeled_prototypes: no sentences");
  const std::size_t m = paraphrase_embeddings.front().size();
  for (const auto& row : paraphrase_embeddings) {
    if (row.size() != m) throw std::invalid_argument("unlabeled_prototypes: ragged U x M input");
  }
  return compute_prototypes(paraphrase_embeddings);
}

Vector consistency_distribution(std::span<const double> unlabeled_embedding, const Prototypes& prototypes,
                                DistanceKind kind) {
  return classify(unlabeled_embedding, prototypes, kind);
}

namespace {

struct EncodedBatch {
  std::vector<EncodeTrace> sentences;
  std::vector<std::vector<EncodeTrace>> paraphrases;
};

EncodedBatch encode_batch(const UnlabeledBatch& batch, const EncoderParams& params, const Vocabulary& vocab) {
  batch.validate();
  EncodedBatch enc;
  for (const auto& s : batch.sentences) enc.sentences.push_back(encode_traced(params, tokenize(s), vocab));
  enc.paraphrases.resize(batch.paraphrases.size());
  for (std::size_t u = 0; u < batch.paraphrases.size(); ++u) {
    for (const auto& p : batch.paraphrases[u]) {
      enc.paraphrases[u].push_back(encode_traced(params, tokenize(p), vocab));
    }
  }
  return enc;
}

struct BatchLoss {
  EncodedBatch enc;
  PrototypeLossResult result;
};

BatchLoss batch_loss(const UnlabeledBatch& batch, const EncoderParams& params, const Vocabulary& vocab,
                     DistanceKind kind) {
  BatchLoss out{encode_batch(batch, params, vocab), {}};
  std::vector<Vector> queries;
  std::vector<std::size_t> targets;
  for (std::size_t u = 0; u < out.enc.sentences.size(); ++u) {
    queries.push_back(out.enc.sentences[u].output);
    targets.push_back(u);
  }
  std::vector<std::vector<Vector>> groups(out.enc.paraphrases.size());
  for (std::size_t u = 0; u < groups.size(); ++u) {
    for (const auto& t : out.enc.paraphrases[u]) groups[u].push_back(t.output);
  }
  out.result = prototype_loss(queries, targets, groups, kind);
  return out;
}

}  // namespace

LossAndGrads unsupervised_loss(const UnlabeledBatch& batch, const EncoderParams& params,
                               const Vocabulary& vocab, DistanceKind kind) {
  const BatchLoss bl = batch_loss(batch, params, vocab, kind);
  LossAndGrads out{bl.result.loss, EncoderGrads(params.shape())};
  for (std::size_t u = 0; u < bl.enc.sentences.size(); ++u) {
    accumulate_encode_backward(params, bl.enc.sentences[u], bl.result.query_grads[u], out.grads);
    for (std::size_t m = 0; m < bl.enc.paraphrases[u].size(); ++m) {
      accumulate_encode_backward(params, bl.enc.paraphrases[u][m], bl.result.member_grads[u][m], out.grads);
    }
  }
  return out;
}

double unsupervised_loss_value(const UnlabeledBatch& batch, const EncoderParams& params,
                               const Vocabulary& vocab, DistanceKind kind) {
  return batch_loss(batch, params, vocab, kind).result.loss;
}

double anneal_weight(std::size_t step, const AnnealSchedule& schedule) {
  if (schedule.total_steps == 0) throw std::invalid_argument("anneal schedule needs total_steps >= 1");
  if (!(schedule.alpha > 0.0)) throw std::invalid_argument("anneal schedule needs alpha > 0");
  if (step > schedule.total_steps) {
    throw std::out_of_range("anneal_weight: step " + std::to_string(step) + " exceeds total " +
                            std::to_string(schedule.total_steps));
  }
  if (step == 0) return 0.0;
  if (step == schedule.total_steps) return 1.0;
  const double t = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return std::pow(t, schedule.alpha);
}

CombinedGradient combined_gradient(const Episode& episode, const UnlabeledBatch* batch,
                                   const EncoderParams& params, const Vocabulary& vocab,
                                   const AnnealSchedule& schedule, std::size_t step, DistanceKind kind) {
  LossAndGrads sup = supervised_episode_loss(episode, params, vocab, kind);
  CombinedGradient out{{}, EncoderGrads(params.shape())};
  out.losses.supervised = sup.loss;
  if (batch == nullptr) {
    out.losses.combined = sup.loss;
    out.grads = std::move(sup.grads);
    return out;
  }
  const double w = anneal_weight(step, schedule);
  LossAndGrads unsup = unsupervised_loss(*batch, params, vocab, kind);
  out.losses.unsupervised = unsup.loss;
  out.losses.weight = w;
  out.losses.combined = w * unsup.loss + (1.0 - w) * sup.loss;
  auto g = out.grads.values();
  auto gs = sup.grads.values();
  auto gu = unsup.grads.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = w * gu[i] + (1.0 - w) * gs[i];
  return out;
}

StepLosses combined_training_step(const Episode& episode, const UnlabeledBatch* batch, EncoderParams& params,
                                  AdamOptimizer& optimizer, const Vocabulary& vocab,
                                  const AnnealSchedule& schedule, std::size_t step, DistanceKind kind) {
  CombinedGradient cg = combined_gradient(episode, batch, params, vocab, schedule, step, kind);
  optimizer.step(params, cg.grads);
  return cg.losses;
}

std::string format_step_log(std::size_t step, const StepLosses& losses) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "step=%zu sup=%.6f unsup=%.6f weight=%.6f loss=%.6f", step,
                losses.supervised, losses.unsupervised, losses.weight, losses.combined);
  return buf;
}

}  // namespace protaugment
