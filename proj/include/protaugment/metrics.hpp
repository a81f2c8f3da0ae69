#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "protaugment/encoder.hpp"
#include "protaugment/numerics.hpp"

namespace protaugment {

/// Distinct adjacent bigrams across all sentences divided by the total token count.
double distinct_2(const std::vector<Tokens>& sentences);

struct BleuOptions {
  std::size_t max_n = 4;
  bool smoothing = true;  // add-one on orders with zero matches
};

// Modified n-gram precision BLEU with brevity penalty against the closest
// reference length. Orders longer than the candidate are left out of the
// geometric mean, so any sentence scores exactly 1 against itself.
double bleu(const Tokens& candidate, const std::vector<Tokens>& references, BleuOptions options = {});

/// Mean cosine similarity over all unordered pairs.
double mean_pairwise_similarity(const std::vector<Vector>& embeddings);

struct DiversityReport {
  double dist2 = 0.0;
  double bleu_vs_source = 0.0;
  double mean_pairwise_similarity = 0.0;
};

DiversityReport diversity_report(const std::string& source, const std::vector<std::string>& paraphrases,
                                 const EncoderParams& params, const Vocabulary& vocab);

// Field-wise mean of several reports.
DiversityReport average_reports(const std::vector<DiversityReport>& reports);

}  // namespace protaugment
