#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "protaugment/encoder.hpp"
#include "protaugment/episodes.hpp"
#include "protaugment/protonet.hpp"

namespace protaugment {

// U unlabeled sentences, each with exactly M paraphrases.
struct UnlabeledBatch {
  std::vector<std::string> sentences;
  std::vector<std::vector<std::string>> paraphrases;

  void validate() const;
};

/// p_u = mean of the M paraphrase embeddings of sentence u. Throws on ragged input.
Prototypes unlabeled_prototypes(const std::vector<std::vector<Vector>>& paraphrase_embeddings);

/// Assignment distribution of one unlabeled embedding over the U unlabeled prototypes.
Vector consistency_distribution(std::span<const double> unlabeled_embedding, const Prototypes& prototypes,
                                DistanceKind kind);

/// Mean over u of -log P(u -> own prototype). No stop-gradient on either side.
LossAndGrads unsupervised_loss(const UnlabeledBatch& batch, const EncoderParams& params,
                               const Vocabulary& vocab, DistanceKind kind);

double unsupervised_loss_value(const UnlabeledBatch& batch, const EncoderParams& params,
                               const Vocabulary& vocab, DistanceKind kind);

struct AnnealSchedule {
  double alpha = 1.0;
  std::size_t total_steps = 1;
};

/// (step / total_steps)^alpha. Throws when step is outside [0, total_steps].
double anneal_weight(std::size_t step, const AnnealSchedule& schedule);

struct StepLosses {
  double combined = 0.0;
  double supervised = 0.0;
  double unsupervised = 0.0;
  double weight = 0.0;
};

// Gradient of w * unsupervised + (1 - w) * supervised. Without a batch the
// step is purely supervised.
struct CombinedGradient {
  StepLosses losses;
  EncoderGrads grads;
};

CombinedGradient combined_gradient(const Episode& episode, const UnlabeledBatch* batch,
                                   const EncoderParams& params, const Vocabulary& vocab,
                                   const AnnealSchedule& schedule, std::size_t step, DistanceKind kind);

/// Computes the weighted loss and applies one optimizer step to params.
StepLosses combined_training_step(const Episode& episode, const UnlabeledBatch* batch, EncoderParams& params,
                                  AdamOptimizer& optimizer, const Vocabulary& vocab,
                                  const AnnealSchedule& schedule, std::size_t step, DistanceKind kind);

std::string format_step_log(std::size_t step, const StepLosses& losses);

}  // namespace protaugment
