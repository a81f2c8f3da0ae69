#include "protaugment/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace protaugment {

double distinct_2(const std::vector<Tokens>& sentences) {
  std::set<std::pair<std::string, std::string>> unique;
  std::size_t total = 0;
  for (const auto& s : sentences) {
    total += s.size();
    for (std::size_t i = 1; i < s.size(); ++i) unique.emplace(s[i - 1], s[i]);
  }
  if (total == 0) throw std::invalid_argument("distinct_2: corpus has no tokens");
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

double bleu(const Tokens& candidate, const std::vector<Tokens>& references, BleuOptions options) {
  if (candidate.empty()) throw std::invalid_argument("bleu: empty candidate");
  if (references.empty()) throw std::invalid_argument("bleu: no references");
  if (options.max_n == 0) throw std::invalid_argument("bleu: max_n must be >= 1");

  const std::size_t orders = std::min(options.max_n, candidate.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const NgramCounts cand = count_ngrams(candidate, n);
    NgramCounts max_ref;
    for (const auto& ref : references) {
      for (const auto& [gram, c] : count_ngrams(ref, n)) max_ref[gram] = std::max(max_ref[gram], c);
    }
    std::size_t matches = 0;
    std::size_t total = 0;
    for (const auto& [gram, c] : cand) {
      total += c;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) matches += std::min(c, it->second);
    }
    double precision;
    if (matches == 0) {
      if (!options.smoothing) return 0.0;
      precision = 1.0 / static_cast<double>(total + 1);
    } else {
      precision = static_cast<double>(matches) / static_cast<double>(total);
    }
    log_sum += std::log(precision);
  }

  const double c = static_cast<double>(candidate.size());
  double r = static_cast<double>(references.front().size());
  for (const auto& ref : references) {
    const double len = static_cast<double>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) r = len;
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

double mean_pairwise_similarity(const std::vector<Vector>& embeddings) {
  if (embeddings.size() < 2) throw std::invalid_argument("mean_pairwise_similarity: need at least 2 embeddings");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      total += 1.0 - cosine_distance(embeddings[i], embeddings[j]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

DiversityReport diversity_report(const std::string& source, const std::vector<std::string>& paraphrases,
                                 const EncoderParams& params, const Vocabulary& vocab) {
  if (paraphrases.size() < 2) throw std::invalid_argument("diversity_report: need at least 2 paraphrases");
  const Tokens source_tokens = tokenize(source);
  std::vector<Tokens> all{source_tokens};
  std::vector<Vector> embeddings{encode(params, source_tokens, vocab)};
  double bleu_total = 0.0;
  for (const auto& p : paraphrases) {
    Tokens toks = tokenize(p);
    bleu_total += toks.empty() ? 0.0 : bleu(toks, {source_tokens});
    embeddings.push_back(encode(params, toks, vocab));
    all.push_back(std::move(toks));
  }
  DiversityReport report;
  report.dist2 = distinct_2(all);
  report.bleu_vs_source = bleu_total / static_cast<double>(paraphrases.size());
  report.mean_pairwise_similarity = mean_pairwise_similarity(embeddings);
  return report;
}

DiversityReport average_reports(const std::vector<DiversityReport>& reports) {
  DiversityReport mean;
  if (reports.empty()) return mean;
  for (const auto& r : reports) {
    mean.dist2 += r.dist2;
    mean.bleu_vs_source += r.bleu_vs_source;
    mean.mean_pairwise_similarity += r.mean_pairwise_similarity;
  }
  const double n = static_cast<double>(reports.size());
  mean.dist2 /= n;
  mean.bleu_vs_source /= n;
  mean.mean_pairwise_similarity /= n;
  return mean;
}

}  // namespace protaugment
