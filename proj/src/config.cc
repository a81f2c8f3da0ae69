#include "protaugment/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace protaugment {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long parsed = std::stoll(v, &used);
    if (used != v.size() || parsed < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(parsed);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return parsed;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "dataset") {
    dataset = value;
  } else if (key == "profile") {
    if (value == "full") profile = DataProfile::kFull;
    else if (value == "low") profile = DataProfile::kLow;
    else throw std::invalid_argument("config key 'profile': expected full|low, got '" + value + "'");
  } else if (key == "low_samples_per_class") {
    low_samples_per_class = to_size(key, value);
  } else if (key == "ways") {
    episode.ways = to_size(key, value);
  } else if (key == "shots") {
    episode.shots = to_size(key, value);
  } else if (key == "query_per_class") {
    episode.query_per_class = to_size(key, value);
  } else if (key == "unlabeled") {
    episode.unlabeled = to_size(key, value);
  } else if (key == "paraphrases") {
    paraphrases_per_sentence = to_size(key, value);
  } else if (key == "strategy") {
    decode.strategy = parse_strategy(value);
  } else if (key == "num_beams") {
    decode.num_beams = to_size(key, value);
  } else if (key == "num_groups") {
    decode.num_groups = to_size(key, value);
  } else if (key == "diversity_penalty") {
    decode.diversity_penalty = to_double(key, value);
  } else if (key == "p_mask") {
    decode.p_mask = to_double(key, value);
  } else if (key == "curve") {
    decode.curve = parse_mask_curve(value);
  } else if (key == "max_len") {
    decode.max_len = to_size(key, value);
  } else if (key == "decode_seed") {
    decode.seed = to_size(key, value);
  } else if (key == "synonyms") {
    synonyms = value;
  } else if (key == "alpha") {
    alpha = to_double(key, value);
  } else if (key == "max_episodes") {
    max_episodes = to_size(key, value);
  } else if (key == "eval_every") {
    eval_every = to_size(key, value);
  } else if (key == "patience") {
    patience = to_size(key, value);
  } else if (key == "n_eval_episodes") {
    n_eval_episodes = to_size(key, value);
  } else if (key == "seeds") {
    std::vector<std::uint64_t> parsed;
    for (const auto& item : split_list(value)) parsed.push_back(to_size(key, item));
    if (parsed.empty()) throw std::invalid_argument("config key 'seeds': need at least one seed");
    seeds = std::move(parsed);
  } else if (key == "distance") {
    if (value == "euclidean" || value == "squared_euclidean") distance = DistanceKind::kSquaredEuclidean;
    else if (value == "cosine") distance = DistanceKind::kCosine;
    else throw std::invalid_argument("config key 'distance': expected euclidean|cosine, got '" + value + "'");
  } else if (key == "embed_dim") {
    embed_dim = to_size(key, value);
  } else if (key == "output_dim") {
    output_dim = to_size(key, value);
  } else if (key == "learning_rate") {
    learning_rate = to_double(key, value);
  } else if (key == "split") {
    const auto parts = split_list(value);
    if (parts.size() != 3) throw std::invalid_argument("config key 'split': expected train,valid,test ratios");
    split = {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
  } else if (key == "group_by_domain") {
    group_by_domain = to_bool(key, value);
  } else if (key == "threads") {
    threads = to_size(key, value);
  } else if (key == "cache_paraphrases") {
    cache_paraphrases = to_bool(key, value);
  } else if (key == "diversity_sample") {
    diversity_sample = to_size(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("invalid config: " + msg); };
  if (dataset.empty()) fail("dataset path is required");
  if (episode.ways < 2) fail("ways (C) must be >= 2");
  if (episode.shots < 1) fail("shots (K) must be >= 1");
  if (episode.query_per_class < 1) fail("query_per_class must be >= 1");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (max_episodes < eval_every) fail("max_episodes must be >= eval_every");
  if (n_eval_episodes < 1) fail("n_eval_episodes must be >= 1");
  if (!(alpha > 0.0)) fail("alpha must be > 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (embed_dim < 1 || output_dim < 1) fail("encoder dimensions must be >= 1");
  if (decode.p_mask < 0.0 || decode.p_mask > 1.0) fail("p_mask must be in [0, 1]");
  if (decode.diversity_penalty < 0.0) fail("diversity_penalty must be >= 0");
  if (low_samples_per_class < 1) fail("low_samples_per_class must be >= 1");
  if (decode.strategy != Strategy::kNone) {
    if (episode.unlabeled < 1) fail("unlabeled (U) must be >= 1 when a paraphrase strategy is used");
    if (paraphrases_per_sentence < 1) fail("paraphrases (M) must be >= 1");
    if (decode.strategy != Strategy::kStubBackTranslation) {
      if (decode.num_groups != paraphrases_per_sentence) fail("num_groups must equal paraphrases (M)");
      if (decode.num_groups == 0 || decode.num_beams % decode.num_groups != 0) {
        fail("num_beams must be divisible by num_groups");
      }
    }
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "dataset = " << dataset << '\n'
     << "profile = " << (profile == DataProfile::kLow ? "low" : "full") << '\n'
     << "low_samples_per_class = " << low_samples_per_class << '\n'
     << "ways = " << episode.ways << '\n'
     << "shots = " << episode.shots << '\n'
     << "query_per_class = " << episode.query_per_class << '\n'
     << "unlabeled = " << episode.unlabeled << '\n'
     << "paraphrases = " << paraphrases_per_sentence << '\n'
     << "strategy = " << to_string(decode.strategy) << '\n'
     << "num_beams = " << decode.num_beams << '\n'
     << "num_groups = " << decode.num_groups << '\n'
     << "diversity_penalty = " << fmt_double(decode.diversity_penalty) << '\n'
     << "p_mask = " << fmt_double(decode.p_mask) << '\n'
     << "curve = " << to_string(decode.curve) << '\n'
     << "max_len = " << decode.max_len << '\n'
     << "decode_seed = " << decode.seed << '\n'
     << "synonyms = " << synonyms << '\n'
     << "alpha = " << fmt_double(alpha) << '\n'
     << "max_episodes = " << max_episodes << '\n'
     << "eval_every = " << eval_every << '\n'
     << "patience = " << patience << '\n'
     << "n_eval_episodes = " << n_eval_episodes << '\n'
     << "seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << '\n'
     << "distance = " << (distance == DistanceKind::kCosine ? "cosine" : "euclidean") << '\n'
     << "embed_dim = " << embed_dim << '\n'
     << "output_dim = " << output_dim << '\n'
     << "learning_rate = " << fmt_double(learning_rate) << '\n'
     << "split = " << fmt_double(split.train) << ',' << fmt_double(split.valid) << ',' << fmt_double(split.test)
     << '\n'
     << "group_by_domain = " << (group_by_domain ? "true" : "false") << '\n'
     << "threads = " << threads << '\n'
     << "cache_paraphrases = " << (cache_paraphrases ? "true" : "false") << '\n'
     << "diversity_sample = " << diversity_sample << '\n';
  return os.str();
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      config.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* dir = std::getenv(kDataDirEnv); dir != nullptr && *dir != '\0') {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

}  // namespace protaugment
