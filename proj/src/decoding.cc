#include "protaugment/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "protaugment/metrics.hpp"

namespace protaugment {

bool ConstraintSet::forbids(std::span<const TokenId> prefix, TokenId next) const {
  if (banned_unigrams.count(next) > 0) return true;
  if (!prefix.empty() && !banned_bigrams.empty()) {
    return banned_bigrams.count({prefix.back(), next}) > 0;
  }
  return false;
}

const char* to_string(MaskCurve curve) {
  switch (curve) {
    case MaskCurve::kFlat: return "flat";
    case MaskCurve::kDown: return "down";
    case MaskCurve::kUp: return "up";
  }
  return "?";
}

MaskCurve parse_mask_curve(const std::string& name) {
  if (name == "flat") return MaskCurve::kFlat;
  if (name == "down") return MaskCurve::kDown;
  if (name == "up") return MaskCurve::kUp;
  throw std::invalid_argument("unknown mask curve: " + name + " (expected flat|down|up)");
}

std::vector<double> mask_probabilities(std::size_t length, double p_mask, MaskCurve curve) {
  if (p_mask < 0.0 || p_mask > 1.0) throw std::invalid_argument("p_mask must be in [0, 1]");
  std::vector<double> probs(length, p_mask);
  if (curve == MaskCurve::kFlat || length < 2) return probs;
  // Ramp between high and low with (high + low) / 2 == p_mask.
  const double high = std::min(1.0, 2.0 * p_mask);
  const double low = 2.0 * p_mask - high;
  for (std::size_t i = 0; i < length; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(length - 1);
    const double down = high + (low - high) * x;
    probs[i] = curve == MaskCurve::kDown ? down : high + low - down;
  }
  return probs;
}

ConstraintSet build_unigram_constraints(std::span<const TokenId> source, double p_mask, MaskCurve curve,
                                        Rng& rng) {
  const auto probs = mask_probabilities(source.size(), p_mask, curve);
  ConstraintSet set;
  for (std::size_t i = 0; i < source.size(); ++i) {
    // one draw per position, banned or not
    if (uniform01(rng) < probs[i]) set.banned_unigrams.insert(source[i]);
  }
  return set;
}

ConstraintSet build_bigram_constraints(std::span<const TokenId> source) {
  ConstraintSet set;
  for (std::size_t i = 1; i < source.size(); ++i) set.banned_bigrams.emplace(source[i - 1], source[i]);
  return set;
}

namespace {

constexpr TokenId kCarry = std::numeric_limits<TokenId>::max();

struct Candidate {
  std::size_t parent;
  TokenId token;  // kCarry for a finished beam carried over unchanged
  double adjusted;
  double lm;
};

bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.adjusted != b.adjusted) return a.adjusted > b.adjusted;
  if (a.parent != b.parent) return a.parent < b.parent;
  return a.token < b.token;
}

bool any_live(const std::vector<Hypothesis>& beams) {
  return std::any_of(beams.begin(), beams.end(), [](const Hypothesis& h) { return !h.finished; });
}

// One decoding step for one group. `penalty_counts` (indexed by token) holds
// how often earlier groups picked each token at this step; it is updated with
// this group's choices on return.
std::vector<Hypothesis> advance_group(const ConditionalLm& lm, std::span<const TokenId> source,
                                      const std::vector<Hypothesis>& beams, std::size_t width,
                                      std::size_t max_len, const ConstraintSet& constraints,
                                      std::vector<double>& penalty_counts, double penalty,
                                      std::vector<double>& scratch) {
  const std::size_t v = lm.vocab_size();
  const TokenId eos = lm.eos_id();
  std::vector<Candidate> cands;
  for (std::size_t b = 0; b < beams.size(); ++b) {
    const Hypothesis& h = beams[b];
    if (h.finished) {
      cands.push_back({b, kCarry, h.adjusted_score, h.lm_score});
      continue;
    }
    lm.score(source, h.tokens, scratch);
    bool any_word = false;
    for (TokenId w = 0; w < v; ++w) {
      if (constraints.forbids(h.tokens, w)) continue;
      if (!std::isfinite(scratch[w])) throw std::runtime_error("language model returned a non-finite score");
      if (w != eos) any_word = true;
      const double pen = (w != eos && penalty != 0.0) ? penalty * penalty_counts[w] : 0.0;
      cands.push_back({b, w, h.adjusted_score + scratch[w] - pen, h.lm_score + scratch[w]});
    }
    if (!any_word) throw std::runtime_error("constraints exhaust vocabulary");
  }
  const std::size_t keep = std::min(width, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                    candidate_before);

  std::vector<Hypothesis> next;
  next.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const Candidate& c = cands[i];
    Hypothesis h = beams[c.parent];
    h.adjusted_score = c.adjusted;
    h.lm_score = c.lm;
    if (c.token != kCarry) {
      if (c.token == eos) {
        h.finished = true;
      } else {
        h.tokens.push_back(c.token);
        penalty_counts[c.token] += 1.0;
        if (h.tokens.size() >= max_len) h.finished = true;
      }
    }
    next.push_back(std::move(h));
  }
  return next;
}

void rank(std::vector<Hypothesis>& beams) {
  std::stable_sort(beams.begin(), beams.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.adjusted_score != b.adjusted_score) return a.adjusted_score > b.adjusted_score;
    return a.lm_score > b.lm_score;
  });
}

std::vector<std::vector<Hypothesis>> run_groups(const ConditionalLm& lm, std::span<const TokenId> source,
                                                std::size_t group_width, std::size_t num_groups,
                                                double diversity_penalty, std::size_t max_len,
                                                const ConstraintSet& constraints) {
  if (group_width == 0) throw std::invalid_argument("beam width must be >= 1");
  if (max_len == 0) throw std::invalid_argument("max_len must be >= 1");
  std::vector<std::vector<Hypothesis>> groups(num_groups, std::vector<Hypothesis>{Hypothesis{}});
  std::vector<double> scratch(lm.vocab_size());
  std::vector<double> counts(lm.vocab_size());
  for (std::size_t step = 0; step < max_len; ++step) {
    bool live = false;
    for (const auto& g : groups) live = live || any_live(g);
    if (!live) break;
    std::fill(counts.begin(), counts.end(), 0.0);
    for (auto& g : groups) {
      if (!any_live(g)) continue;
      g = advance_group(lm, source, g, group_width, max_len, constraints, counts, diversity_penalty, scratch);
    }
  }
  for (auto& g : groups) rank(g);
  return groups;
}

}  // namespace

std::vector<Hypothesis> beam_search(const ConditionalLm& lm, std::span<const TokenId> source,
                                    std::size_t beam_width, std::size_t max_len,
                                    const ConstraintSet& constraints) {
  return run_groups(lm, source, beam_width, 1, 0.0, max_len, constraints).front();
}

DiverseBeamResult diverse_beam_search(const ConditionalLm& lm, std::span<const TokenId> source,
                                      std::size_t num_beams, std::size_t num_groups, double diversity_penalty,
                                      std::size_t max_len, const ConstraintSet& constraints) {
  if (num_groups == 0 || num_beams % num_groups != 0) {
    throw std::invalid_argument("num_beams (" + std::to_string(num_beams) + ") must be divisible by num_groups (" +
                                std::to_string(num_groups) + ")");
  }
  if (diversity_penalty < 0.0) throw std::invalid_argument("diversity_penalty must be >= 0");
  DiverseBeamResult result;
  result.groups = run_groups(lm, source, num_beams / num_groups, num_groups, diversity_penalty, max_len,
                             constraints);
  for (const auto& g : result.groups) result.selected.push_back(select_most_diverse(lm, g, source));
  return result;
}

const Hypothesis& select_most_diverse(const ConditionalLm& lm, std::span<const Hypothesis> group_beams,
                                      std::span<const TokenId> source) {
  if (group_beams.empty()) throw std::invalid_argument("select_most_diverse: empty group");
  const Tokens reference = lm.to_tokens(source);
  const Hypothesis* best = nullptr;
  double best_bleu = 0.0;
  for (const auto& h : group_beams) {
    if (h.tokens.empty()) continue;
    const double score = reference.empty() ? 0.0 : bleu(lm.to_tokens(h.tokens), {reference});
    if (best == nullptr || score < best_bleu || (score == best_bleu && h.lm_score > best->lm_score)) {
      best = &h;
      best_bleu = score;
    }
  }
  return best != nullptr ? *best : group_beams.front();
}

const char* to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kNone: return "none";
    case Strategy::kStubBackTranslation: return "stub_bt";
    case Strategy::kDbs: return "dbs";
    case Strategy::kDbsUnigram: return "dbs_unigram";
    case Strategy::kDbsBigram: return "dbs_bigram";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "none") return Strategy::kNone;
  if (name == "stub_bt") return Strategy::kStubBackTranslation;
  if (name == "dbs") return Strategy::kDbs;
  if (name == "dbs_unigram") return Strategy::kDbsUnigram;
  if (name == "dbs_bigram") return Strategy::kDbsBigram;
  throw std::invalid_argument("unknown strategy: " + name +
                              " (expected none|stub_bt|dbs|dbs_unigram|dbs_bigram)");
}

std::size_t effective_max_len(const DecodeConfig& config, std::size_t source_length) {
  return config.max_len != 0 ? config.max_len : 2 * source_length + 5;
}

std::vector<std::string> stub_back_translate(const Tokens& sentence, std::size_t m_paraphrases,
                                             const SynonymTable& synonyms) {
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    auto it = synonyms.find(sentence[i]);
    if (it != synonyms.end() && !it->second.empty()) positions.push_back(i);
  }
  std::vector<std::string> out;
  for (std::size_t m = 0; m < m_paraphrases; ++m) {
    Tokens rewrite = sentence;
    if (!positions.empty()) {
      const std::size_t pos = positions[m % positions.size()];
      const auto& options = synonyms.at(sentence[pos]);
      rewrite[pos] = options[(m / positions.size()) % options.size()];
    }
    out.push_back(join_tokens(rewrite));
  }
  return out;
}

std::vector<std::string> generate_paraphrases(const ConditionalLm& lm, const SynonymTable& synonyms,
                                              const std::string& sentence, std::size_t m_paraphrases,
                                              Strategy strategy, const DecodeConfig& config, Rng& rng) {
  if (m_paraphrases == 0) throw std::invalid_argument("generate_paraphrases: M must be >= 1");
  const Tokens tokens = tokenize(sentence);
  switch (strategy) {
    case Strategy::kNone:
      throw std::invalid_argument("generate_paraphrases: strategy 'none' produces no paraphrases");
    case Strategy::kStubBackTranslation:
      return stub_back_translate(tokens, m_paraphrases, synonyms);
    case Strategy::kDbs:
    case Strategy::kDbsUnigram:
    case Strategy::kDbsBigram:
      break;
  }
  if (m_paraphrases != config.num_groups) {
    throw std::invalid_argument("generate_paraphrases: M (" + std::to_string(m_paraphrases) +
                                ") must equal num_groups (" + std::to_string(config.num_groups) + ")");
  }
  const std::vector<TokenId> source = lm.to_ids(tokens);
  ConstraintSet constraints;
  if (strategy == Strategy::kDbsUnigram) {
    constraints = build_unigram_constraints(source, config.p_mask, config.curve, rng);
  } else if (strategy == Strategy::kDbsBigram) {
    constraints = build_bigram_constraints(source);
  }
  const auto result = diverse_beam_search(lm, source, config.num_beams, config.num_groups,
                                          config.diversity_penalty,
                                          effective_max_len(config, source.size()), constraints);
  std::vector<std::string> out;
  for (const auto& h : result.selected) out.push_back(join_tokens(lm.to_tokens(h.tokens)));
  return out;
}

}  // namespace protaugment
