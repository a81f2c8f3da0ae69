#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protaugment/encoder.hpp"
#include "protaugment/rng.hpp"

namespace protaugment {

struct Record {
  std::string text;
  std::string label;
  Tokens tokens;
};

// Immutable labelled corpus. Classes are listed in sorted order.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Record> records, std::map<std::string, std::string> domains);

  const std::vector<Record>& records() const { return records_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::size_t>& records_of(const std::string& label) const;
  std::optional<std::string> domain_of(const std::string& label) const;
  const std::map<std::string, std::string>& domains() const { return domains_; }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<Record> records_;
  std::vector<std::string> classes_;
  std::map<std::string, std::vector<std::size_t>> by_class_;
  std::map<std::string, std::string> domains_;
};

// JSON-lines with "text", "label" and optional "domain". Blank lines are skipped.
Dataset load_dataset(const std::string& path);

enum class SplitPart { kTrain, kValid, kTest };

const char* to_string(SplitPart part);
SplitPart parse_split_part(const std::string& name);

struct ClassSplit {
  std::vector<std::string> train_classes;
  std::vector<std::string> valid_classes;
  std::vector<std::string> test_classes;

  const std::vector<std::string>& part(SplitPart p) const;
};

struct SplitRatios {
  double train = 0.4;
  double valid = 0.3;
  double test = 0.3;
};

ClassSplit split_classes(const Dataset& dataset, SplitRatios ratios, std::uint64_t seed,
                         bool group_by_domain);

// Caps every training class at n_per_class records; other classes keep everything.
Dataset restrict_low_profile(const Dataset& dataset, const ClassSplit& split, std::size_t n_per_class,
                             std::uint64_t seed);

struct LabeledText {
  std::string text;
  Tokens tokens;
  std::size_t label = 0;  // index into Episode::classes
};

struct Episode {
  std::vector<std::string> classes;
  std::vector<LabeledText> support;  // grouped by class, K per class
  std::vector<LabeledText> query;    // grouped by class, query_per_class per class
  std::vector<std::string> unlabeled;
  std::size_t shots = 0;
};

struct EpisodeShape {
  std::size_t ways = 5;
  std::size_t shots = 1;
  std::size_t query_per_class = 5;
  std::size_t unlabeled = 5;
};

// Samples C classes of `part`, then K support and q query records per class
// without overlap. Unlabeled texts come from `unlabeled_pool`, or from every
// record of `dataset` when the pool is empty.
Episode sample_episode(const Dataset& dataset, const ClassSplit& split, SplitPart part,
                       const EpisodeShape& shape, Rng& rng,
                       std::span<const std::string> unlabeled_pool = {});

std::vector<std::string> all_texts(const Dataset& dataset);

}  // namespace protaugment
