#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "protaugment/decoding.hpp"
#include "protaugment/episodes.hpp"
#include "protaugment/numerics.hpp"

namespace protaugment {

enum class DataProfile { kFull, kLow };

// Defaults: 5-way episodes, U = M = 5,
// 10,000 episodes max, validation every 100 episodes over 600 episodes,
// patience 20, five seeds.
struct RunConfig {
  std::string dataset;
  DataProfile profile = DataProfile::kFull;
  std::size_t low_samples_per_class = 10;
  EpisodeShape episode{5, 1, 5, 5};
  std::size_t paraphrases_per_sentence = 5;
  DecodeConfig decode;
  std::string synonyms;  // empty: built-in table
  double alpha = 1.0;
  std::size_t max_episodes = 10000;
  std::size_t eval_every = 100;
  std::size_t patience = 20;
  std::size_t n_eval_episodes = 600;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  DistanceKind distance = DistanceKind::kSquaredEuclidean;
  std::size_t embed_dim = 32;
  std::size_t output_dim = 32;
  double learning_rate = 1e-3;
  SplitRatios split{0.4, 0.3, 0.3};
  bool group_by_domain = false;
  std::size_t threads = 1;
  bool cache_paraphrases = false;
  std::size_t diversity_sample = 0;  // sentences scored for the diversity section, 0 disables

  // Applies one key=value assignment; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  std::string to_text() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

// Relative dataset paths that do not exist from the working directory are
// looked up under $PROTAUGMENT_DATA_DIR.
std::string resolve_data_path(const std::string& path);

inline constexpr const char* kDataDirEnv = "PROTAUGMENT_DATA_DIR";

}  // namespace protaugment
