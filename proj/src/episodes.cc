#include "protaugment/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace protaugment {

Dataset::Dataset(std::vector<Record> records, std::map<std::string, std::string> domains)
    : records_(std::move(records)), domains_(std::move(domains)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].tokens.empty()) records_[i].tokens = tokenize(records_[i].text);
    by_class_[records_[i].label].push_back(i);
  }
  for (const auto& [label, _] : by_class_) classes_.push_back(label);
}

const std::vector<std::size_t>& Dataset::records_of(const std::string& label) const {
  auto it = by_class_.find(label);
  if (it == by_class_.end()) throw std::out_of_range("unknown class: " + label);
  return it->second;
}

std::optional<std::string> Dataset::domain_of(const std::string& label) const {
  auto it = domains_.find(label);
  if (it == domains_.end()) return std::nullopt;
  return it->second;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::vector<Record> records;
  std::map<std::string, std::string> domains;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw std::runtime_error(where + ": expected a JSON object");
    for (const char* key : {"text", "label"}) {
      if (!obj.contains(key) || !obj[key].is_string()) {
        throw std::runtime_error(where + ": missing string field \"" + key + "\"");
      }
    }
    Record rec{obj["text"].get<std::string>(), obj["label"].get<std::string>(), {}};
    rec.tokens = tokenize(rec.text);
    if (rec.tokens.empty()) throw std::runtime_error(where + ": text is empty after tokenization");
    if (obj.contains("domain")) {
      if (!obj["domain"].is_string()) throw std::runtime_error(where + ": \"domain\" must be a string");
      auto [it, inserted] = domains.emplace(rec.label, obj["domain"].get<std::string>());
      if (!inserted && it->second != obj["domain"].get<std::string>()) {
        throw std::runtime_error(where + ": class " + rec.label + " assigned to two domains");
      }
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw std::runtime_error("dataset is empty: " + path);
  return Dataset(std::move(records), std::move(domains));
}

const char* to_string(SplitPart part) {
  switch (part) {
    case SplitPart::kTrain: return "train";
    case SplitPart::kValid: return "valid";
    case SplitPart::kTest: return "test";
  }
  return "?";
}

SplitPart parse_split_part(const std::string& name) {
  if (name == "train") return SplitPart::kTrain;
  if (name == "valid") return SplitPart::kValid;
  if (name == "test") return SplitPart::kTest;
  throw std::invalid_argument("unknown split part: " + name);
}

const std::vector<std::string>& ClassSplit::part(SplitPart p) const {
  switch (p) {
    case SplitPart::kTrain: return train_classes;
    case SplitPart::kValid: return valid_classes;
    case SplitPart::kTest: return test_classes;
  }
  throw std::invalid_argument("bad split part");
}

namespace {

// Largest-remainder apportionment with every part getting at least one unit.
std::array<std::size_t, 3> part_sizes(std::size_t total, const SplitRatios& r) {
  const std::array<double, 3> ratios{r.train, r.valid, r.test};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(total);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  while (assigned < total) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (remainder[i] > remainder[best] + 1e-12) best = i;
    }
    ++sizes[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (sizes[i] != 0) continue;
    std::size_t donor = 0;
    for (std::size_t j = 1; j < 3; ++j) {
      if (sizes[j] > sizes[donor]) donor = j;
    }
    --sizes[donor];
    ++sizes[i];
  }
  return sizes;
}

}  // namespace

ClassSplit split_classes(const Dataset& dataset, SplitRatios ratios, std::uint64_t seed,
                         bool group_by_domain) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  }
  Rng rng(seed);

  // Each group is a set of classes that must land in the same part.
  std::vector<std::vector<std::string>> groups;
  if (group_by_domain) {
    std::map<std::string, std::vector<std::string>> by_domain;
    for (const auto& label : dataset.classes()) {
      auto domain = dataset.domain_of(label);
      by_domain[domain ? "d:" + *domain : "c:" + label].push_back(label);
    }
    for (auto& [_, members] : by_domain) groups.push_back(std::move(members));
  } else {
    for (const auto& label : dataset.classes()) groups.push_back({label});
  }
  if (groups.size() < 3) {
    throw std::invalid_argument("split_classes: need at least 3 " +
                                std::string(group_by_domain ? "domains" : "classes") + ", found " +
                                std::to_string(groups.size()));
  }
  shuffle_in_place(groups, rng);

  ClassSplit split;
  std::array<std::vector<std::string>*, 3> parts{&split.train_classes, &split.valid_classes,
                                                 &split.test_classes};
  if (!group_by_domain) {
    const auto sizes = part_sizes(groups.size(), ratios);
    std::size_t cursor = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t i = 0; i < sizes[p]; ++i) parts[p]->push_back(groups[cursor++].front());
    }
  } else {
    const double total = static_cast<double>(dataset.classes().size());
    const std::array<double, 3> target{ratios.train * total, ratios.valid * total, ratios.test * total};
    // Seed each part with one group, then hand each remaining group to the
    // part furthest below its target.
    for (std::size_t p = 0; p < 3; ++p) {
      for (auto& c : groups[p]) parts[p]->push_back(c);
    }
    for (std::size_t g = 3; g < groups.size(); ++g) {
      std::size_t best = 0;
      double best_deficit = -1e300;
      for (std::size_t p = 0; p < 3; ++p) {
        const double deficit = target[p] - static_cast<double>(parts[p]->size());
        if (deficit > best_deficit + 1e-12) {
          best_deficit = deficit;
          best = p;
        }
      }
      for (auto& c : groups[g]) parts[best]->push_back(c);
    }
  }
  for (auto* part : parts) std::sort(part->begin(), part->end());
  return split;
}

Dataset restrict_low_profile(const Dataset& dataset, const ClassSplit& split, std::size_t n_per_class,
                             std::uint64_t seed) {
  if (n_per_class == 0) throw std::invalid_argument("restrict_low_profile: n_per_class must be >= 1");
  Rng rng(seed);
  std::vector<bool> keep(dataset.size(), true);
  for (const auto& label : split.train_classes) {
    const auto& idx = dataset.records_of(label);
    if (idx.size() <= n_per_class) continue;
    for (std::size_t i : idx) keep[i] = false;
    for (std::size_t pick : sample_without_replacement(rng, idx.size(), n_per_class)) keep[idx[pick]] = true;
  }
  std::vector<Record> kept;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (keep[i]) kept.push_back(dataset.records()[i]);
  }
  return Dataset(std::move(kept), dataset.domains());
}

Episode sample_episode(const Dataset& dataset, const ClassSplit& split, SplitPart part,
                       const EpisodeShape& shape, Rng& rng, std::span<const std::string> unlabeled_pool) {
  const auto& candidates = split.part(part);
  if (shape.ways == 0 || shape.shots == 0) throw std::invalid_argument("episode needs C >= 1 and K >= 1");
  if (candidates.size() < shape.ways) {
    throw std::invalid_argument(std::string("split part '") + to_string(part) + "' has " +
                                std::to_string(candidates.size()) + " classes, episode needs " +
                                std::to_string(shape.ways));
  }
  Episode ep;
  ep.shots = shape.shots;
  const std::size_t per_class = shape.shots + shape.query_per_class;
  for (std::size_t pick : sample_without_replacement(rng, candidates.size(), shape.ways)) {
    ep.classes.push_back(candidates[pick]);
  }
  for (std::size_t c = 0; c < ep.classes.size(); ++c) {
    const auto& idx = dataset.records_of(ep.classes[c]);
    if (idx.size() < per_class) {
      throw std::invalid_argument("class '" + ep.classes[c] + "' has " + std::to_string(idx.size()) +
                                  " records, episode needs " + std::to_string(per_class));
    }
    auto picks = sample_without_replacement(rng, idx.size(), per_class);
    for (std::size_t j = 0; j < per_class; ++j) {
      const Record& rec = dataset.records()[idx[picks[j]]];
      LabeledText item{rec.text, rec.tokens, c};
      (j < shape.shots ? ep.support : ep.query).push_back(std::move(item));
    }
  }
  if (shape.unlabeled > 0) {
    if (unlabeled_pool.empty()) {
      if (dataset.size() < shape.unlabeled) throw std::invalid_argument("dataset smaller than unlabeled batch");
      for (std::size_t pick : sample_without_replacement(rng, dataset.size(), shape.unlabeled)) {
        ep.unlabeled.push_back(dataset.records()[pick].text);
      }
    } else {
      if (unlabeled_pool.size() < shape.unlabeled) throw std::invalid_argument("unlabeled pool smaller than U");
      for (std::size_t pick : sample_without_replacement(rng, unlabeled_pool.size(), shape.unlabeled)) {
        ep.unlabeled.push_back(unlabeled_pool[pick]);
      }
    }
  }
  return ep;
}

std::vector<std::string> all_texts(const Dataset& dataset) {
  std::vector<std::string> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset.records()) out.push_back(r.text);
  return out;
}

}  // namespace protaugment
