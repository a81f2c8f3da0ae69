#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "protaugment/encoder.hpp"
#include "protaugment/episodes.hpp"
#include "protaugment/numerics.hpp"

namespace protaugment {

struct Prototypes {
  std::vector<Vector> vectors;
  std::vector<std::string> classes;  // may be empty for anonymous prototypes
};

/// Mean of each group's embeddings. Throws on an empty group or inconsistent dimensions.
Prototypes compute_prototypes(const std::vector<std::vector<Vector>>& grouped_embeddings,
                              std::vector<std::string> class_names = {});

/// softmax(-d(query, p_c)) over the prototypes.
Vector classify(std::span<const double> query, const Prototypes& prototypes, DistanceKind kind);

/// Index of the most probable prototype; ties go to the lowest index.
std::size_t argmax(std::span<const double> probs);

// Shared core of the supervised and unsupervised objectives: each query is
// classified against the mean of every group and scored by cross-entropy
// against its target group. Gradients are returned per input embedding.
struct PrototypeLossResult {
  double loss = 0.0;
  std::vector<Vector> query_grads;
  std::vector<std::vector<Vector>> member_grads;  // same shape as the groups
};

PrototypeLossResult prototype_loss(std::span<const Vector> queries, std::span<const std::size_t> targets,
                                   const std::vector<std::vector<Vector>>& groups, DistanceKind kind);

struct LossAndGrads {
  double loss = 0.0;
  EncoderGrads grads;
};

/// Mean cross-entropy of the query points; gradients flow through both
/// query and support embeddings.
LossAndGrads supervised_episode_loss(const Episode& episode, const EncoderParams& params,
                                     const Vocabulary& vocab, DistanceKind kind);

double supervised_episode_loss_value(const Episode& episode, const EncoderParams& params,
                                     const Vocabulary& vocab, DistanceKind kind);

/// Fraction of correctly classified query points in one episode.
double episode_accuracy(const Episode& episode, const EncoderParams& params, const Vocabulary& vocab,
                        DistanceKind kind);

struct EvalResult {
  double mean_accuracy = 0.0;
  std::vector<double> per_episode_accuracies;
  std::size_t episode_count = 0;
};

EvalResult evaluate(const EncoderParams& params, const Vocabulary& vocab, const Dataset& dataset,
                    const ClassSplit& split, SplitPart part, EpisodeShape shape, std::size_t n_episodes,
                    Rng& rng, DistanceKind kind = DistanceKind::kSquaredEuclidean);

}  // namespace protaugment
