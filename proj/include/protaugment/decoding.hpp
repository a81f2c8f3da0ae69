#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protaugment/encoder.hpp"
#include "protaugment/rng.hpp"

namespace protaugment {

using TokenId = std::uint32_t;

// A conditional language model scores every next token (end-of-sequence
// included) given the source sentence and the prefix generated so far.
// Implementations must be safe for concurrent calls to score().
class ConditionalLm {
 public:
  virtual ~ConditionalLm() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual TokenId eos_id() const = 0;
  virtual const std::string& token_text(TokenId id) const = 0;
  virtual std::optional<TokenId> token_id(const std::string& text) const = 0;

  // Writes a finite log-probability for every token id into log_probs.
  virtual void score(std::span<const TokenId> source, std::span<const TokenId> prefix,
                     std::span<double> log_probs) const = 0;

  // Source tokens unknown to the model map to nullopt and are dropped.
  std::vector<TokenId> to_ids(std::span<const std::string> tokens) const;
  Tokens to_tokens(std::span<const TokenId> ids) const;
};

using SynonymTable = std::map<std::string, std::vector<std::string>>;

struct ConstraintSet {
  std::set<TokenId> banned_unigrams;
  std::set<std::pair<TokenId, TokenId>> banned_bigrams;

  bool empty() const { return banned_unigrams.empty() && banned_bigrams.empty(); }
  // True when appending `next` after `prefix` violates a constraint.
  bool forbids(std::span<const TokenId> prefix, TokenId next) const;
};

enum class MaskCurve { kFlat, kDown, kUp };

const char* to_string(MaskCurve curve);
MaskCurve parse_mask_curve(const std::string& name);

/// Per-position masking probabilities: linear ramps whose mean is p_mask and
/// whose values stay in [0, 1].
std::vector<double> mask_probabilities(std::size_t length, double p_mask, MaskCurve curve);

ConstraintSet build_unigram_constraints(std::span<const TokenId> source, double p_mask, MaskCurve curve, Rng& rng);

ConstraintSet build_bigram_constraints(std::span<const TokenId> source);

struct Hypothesis {
  std::vector<TokenId> tokens;  // end-of-sequence excluded
  double lm_score = 0.0;        // sum of model log-probabilities
  double adjusted_score = 0.0;  // lm_score minus accumulated diversity penalties
  bool finished = false;
};

// Beams ranked by adjusted score. Each step extends every live hypothesis by
// one token (end-of-sequence included); a sequence ends on end-of-sequence or
// after max_len steps.
std::vector<Hypothesis> beam_search(const ConditionalLm& lm, std::span<const TokenId> source,
                                    std::size_t beam_width, std::size_t max_len,
                                    const ConstraintSet& constraints);

struct DiverseBeamResult {
  std::vector<std::vector<Hypothesis>> groups;  // ranked beams per group
  std::vector<Hypothesis> selected;             // one output per group
};

// Groups advance in lockstep; at each step group g pays diversity_penalty for
// every time a token was already chosen at that step by groups 0..g-1
// (Hamming diversity). End-of-sequence is not penalised.
DiverseBeamResult diverse_beam_search(const ConditionalLm& lm, std::span<const TokenId> source,
                                      std::size_t num_beams, std::size_t num_groups, double diversity_penalty,
                                      std::size_t max_len, const ConstraintSet& constraints);

/// Beam with the lowest BLEU against the source; ties go to the higher model score.
/// Empty beams are only chosen when nothing else is available.
const Hypothesis& select_most_diverse(const ConditionalLm& lm, std::span<const Hypothesis> group_beams,
                                      std::span<const TokenId> source);

enum class Strategy { kNone, kStubBackTranslation, kDbs, kDbsUnigram, kDbsBigram };

const char* to_string(Strategy strategy);
Strategy parse_strategy(const std::string& name);

struct DecodeConfig {
  std::size_t num_beams = 15;
  std::size_t num_groups = 5;
  double diversity_penalty = 0.5;
  double p_mask = 0.7;
  MaskCurve curve = MaskCurve::kFlat;
  Strategy strategy = Strategy::kDbsUnigram;
  std::size_t max_len = 0;  // 0 means 2 * source length + 5
  std::uint64_t seed = 0;
};

std::size_t effective_max_len(const DecodeConfig& config, std::size_t source_length);

// Back-translation stand-in: rewrite m swaps exactly one token for a synonym,
// cycling over substitutable positions and then over synonyms.
std::vector<std::string> stub_back_translate(const Tokens& sentence, std::size_t m_paraphrases,
                                             const SynonymTable& synonyms);

std::vector<std::string> generate_paraphrases(const ConditionalLm& lm, const SynonymTable& synonyms,
                                              const std::string& sentence, std::size_t m_paraphrases,
                                              Strategy strategy, const DecodeConfig& config, Rng& rng);

struct ToyLmConfig {
  double copy_mass = 0.4;       // next source token under a monotone alignment
  double synonym_mass = 0.45;   // shared by that token's synonyms, decaying
  double synonym_decay = 0.75;  // ratio between consecutive synonyms
  double skip_mass = 0.05;      // the source token after next
  double early_eos_mass = 0.001;
  double background_weight = 0.1;  // interpolation weight of the bigram model
  double smoothing = 0.1;          // additive smoothing of bigram counts
};

// Desk-scale paraphrase model: a conditional component that walks the source
// left to right (copy, synonym, skip) interpolated with a smoothed corpus
// bigram model. Banning a source token leaves its synonyms as the most
// probable alternatives.
class ToySynonymLm final : public ConditionalLm {
 public:
  ToySynonymLm(const std::vector<Tokens>& corpus, SynonymTable synonyms, ToyLmConfig config = {});

  std::size_t vocab_size() const override { return tokens_.size(); }
  TokenId eos_id() const override { return 0; }
  const std::string& token_text(TokenId id) const override { return tokens_.at(id); }
  std::optional<TokenId> token_id(const std::string& text) const override;
  void score(std::span<const TokenId> source, std::span<const TokenId> prefix,
             std::span<double> log_probs) const override;

  const SynonymTable& synonyms() const { return synonyms_; }
  const ToyLmConfig& config() const { return config_; }

 private:
  static constexpr std::size_t kDenseCacheLimit = 2048;

  TokenId intern(const std::string& token);
  void fill_background(TokenId prev, std::span<double> row) const;

  ToyLmConfig config_;
  SynonymTable synonyms_;
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId> index_;
  std::vector<std::vector<TokenId>> synonym_ids_;
  // Bigram counts per context; the end-of-sequence row is the sentence start.
  std::vector<std::vector<std::pair<TokenId, double>>> counts_;
  std::vector<double> totals_;
  // log(background_weight * P_bigram(w | prev)), cached for small vocabularies.
  std::vector<std::vector<double>> background_log_;
};

}  // namespace protaugment
