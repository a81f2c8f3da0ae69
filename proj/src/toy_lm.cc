#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "protaugment/decoding.hpp"

namespace protaugment {

std::vector<TokenId> ConditionalLm::to_ids(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto id = token_id(t); id && *id != eos_id()) ids.push_back(*id);
  }
  return ids;
}

Tokens ConditionalLm::to_tokens(std::span<const TokenId> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(token_text(id));
  return out;
}

ToySynonymLm::ToySynonymLm(const std::vector<Tokens>& corpus, SynonymTable synonyms, ToyLmConfig config)
    : config_(config), synonyms_(std::move(synonyms)) {
  if (config_.background_weight < 0.0 || config_.background_weight >= 1.0) {
    throw std::invalid_argument("toy LM: background_weight must be in [0, 1)");
  }
  if (!(config_.smoothing > 0.0)) throw std::invalid_argument("toy LM: smoothing must be positive");
  intern("</s>");
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence) intern(t);
  }
  for (const auto& [word, syns] : synonyms_) {
    intern(word);
    for (const auto& s : syns) intern(s);
  }
  const std::size_t v = tokens_.size();

  synonym_ids_.resize(v);
  for (const auto& [word, syns] : synonyms_) {
    auto& ids = synonym_ids_[index_.at(word)];
    for (const auto& s : syns) {
      const TokenId id = index_.at(s);
      if (id != index_.at(word) && std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }
  }

  counts_.resize(v);
  totals_.assign(v, 0.0);
  for (const auto& sentence : corpus) {
    TokenId prev = eos_id();
    for (const auto& t : sentence) {
      const TokenId cur = index_.at(t);
      counts_[prev].emplace_back(cur, 1.0);
      totals_[prev] += 1.0;
      prev = cur;
    }
    counts_[prev].emplace_back(eos_id(), 1.0);
    totals_[prev] += 1.0;
  }
  for (auto& row : counts_) {
    std::sort(row.begin(), row.end());
    std::vector<std::pair<TokenId, double>> merged;
    for (const auto& [id, c] : row) {
      if (!merged.empty() && merged.back().first == id) {
        merged.back().second += c;
      } else {
        merged.emplace_back(id, c);
      }
    }
    row = std::move(merged);
  }
  if (v <= kDenseCacheLimit) {
    background_log_.resize(v);
    for (std::size_t prev = 0; prev < v; ++prev) {
      background_log_[prev].resize(v);
      fill_background(static_cast<TokenId>(prev), background_log_[prev]);
    }
  }
}

void ToySynonymLm::fill_background(TokenId prev, std::span<double> row) const {
  const double k = config_.smoothing;
  const double weight = config_.background_weight;
  const double denom = totals_[prev] + k * static_cast<double>(tokens_.size());
  if (weight == 0.0) {
    std::fill(row.begin(), row.end(), -1e30);
    return;
  }
  std::fill(row.begin(), row.end(), std::log(weight * k / denom));
  for (const auto& [next, c] : counts_[prev]) row[next] = std::log(weight * (c + k) / denom);
}

TokenId ToySynonymLm::intern(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::optional<TokenId> ToySynonymLm::token_id(const std::string& text) const {
  auto it = index_.find(text);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void ToySynonymLm::score(std::span<const TokenId> source, std::span<const TokenId> prefix,
                         std::span<double> log_probs) const {
  const std::size_t v = tokens_.size();
  if (log_probs.size() != v) throw std::invalid_argument("toy LM: output buffer has wrong size");

  auto matches = [&](TokenId generated, TokenId src) {
    if (generated == src) return true;
    const auto& syn = synonym_ids_[src];
    return std::find(syn.begin(), syn.end(), generated) != syn.end();
  };
  // Monotone alignment of the prefix against the source.
  std::size_t pos = 0;
  for (TokenId t : prefix) {
    if (pos < source.size() && matches(t, source[pos])) {
      pos += 1;
    } else if (pos + 1 < source.size() && matches(t, source[pos + 1])) {
      pos += 2;
    } else {
      pos += 1;
    }
  }

  // Conditional component as a sparse distribution.
  std::vector<std::pair<TokenId, double>> cond;
  auto add = [&](TokenId id, double mass) {
    for (auto& [cid, m] : cond) {
      if (cid == id) {
        m += mass;
        return;
      }
    }
    cond.emplace_back(id, mass);
  };
  if (pos >= source.size()) {
    add(eos_id(), 1.0);
  } else {
    const TokenId target = source[pos];
    add(target, config_.copy_mass);
    const auto& syn = synonym_ids_[target];
    if (!syn.empty()) {
      double norm = 0.0;
      double w = 1.0;
      for (std::size_t i = 0; i < syn.size(); ++i, w *= config_.synonym_decay) norm += w;
      w = 1.0;
      for (std::size_t i = 0; i < syn.size(); ++i, w *= config_.synonym_decay) {
        add(syn[i], config_.synonym_mass * w / norm);
      }
    }
    add(pos + 1 < source.size() ? source[pos + 1] : eos_id(), config_.skip_mass);
    add(eos_id(), config_.early_eos_mass);
    double total = 0.0;
    for (const auto& [_, m] : cond) total += m;
    for (auto& [_, m] : cond) m /= total;
  }

  const TokenId prev = prefix.empty() ? eos_id() : prefix.back();
  if (background_log_.empty()) {
    fill_background(prev, log_probs);
  } else {
    std::copy(background_log_[prev].begin(), background_log_[prev].end(), log_probs.begin());
  }
  const double cond_weight = 1.0 - config_.background_weight;
  for (const auto& [id, m] : cond) {
    const double bg = config_.background_weight > 0.0 ? std::exp(log_probs[id]) : 0.0;
    log_probs[id] = std::log(cond_weight * m + bg);
  }
}

}  // namespace protaugment
