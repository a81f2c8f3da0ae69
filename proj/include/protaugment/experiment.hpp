#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "protaugment/config.hpp"
#include "protaugment/decoding.hpp"
#include "protaugment/encoder.hpp"
#include "protaugment/episodes.hpp"
#include "protaugment/metrics.hpp"
#include "protaugment/protonet.hpp"

namespace protaugment {

// Everything shared by the seeds of one run: the corpus, the paraphrase model
// and the encoder vocabulary (corpus tokens plus every synonym).
struct ExperimentContext {
  Dataset dataset;
  SynonymTable synonyms;
  std::unique_ptr<ToySynonymLm> lm;
  Vocabulary vocab;
};

ExperimentContext prepare_context(const RunConfig& config);

struct CurvePoint {
  std::size_t episode = 0;
  double supervised = 0.0;    // means over the episodes since the previous point
  double unsupervised = 0.0;
  double weight = 0.0;
  double combined = 0.0;
  double valid_accuracy = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;  // measured with the best-validation parameters
  double best_valid_accuracy = 0.0;
  std::size_t best_episode = 0;
  std::size_t episodes_run = 0;
  std::size_t evaluations = 0;
  std::size_t valid_episodes_evaluated = 0;
  std::size_t test_episodes_evaluated = 0;
  bool stopped_early = false;
  std::vector<CurvePoint> curve;
};

struct SeedOutcome {
  SeedResult result;
  EncoderParams best_params;
};

// Trains one seed: split, profile restriction, episodic training with
// validation every eval_every episodes and early stopping after `patience`
// evaluations without strict improvement, then a test pass with the best
// validation parameters. Step log lines go to `log` when non-null.
SeedOutcome run_seed(const RunConfig& config, const ExperimentContext& context, std::uint64_t seed,
                     std::ostream* log = nullptr);

struct RunReport {
  std::string method;
  std::string profile;
  std::size_t ways = 0;
  std::size_t shots = 0;
  std::vector<SeedResult> seeds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population standard deviation over seeds
  std::map<std::string, DiversityReport> diversity;
  std::string config_text;
};

RunReport run_experiment(const RunConfig& config, std::ostream* log = nullptr,
                         std::vector<EncoderParams>* best_params = nullptr,
                         const ExperimentContext* context = nullptr);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_and_std(const std::vector<double>& values);

std::string report_to_json(const RunReport& report);

// Writes results.csv, curves.csv and report.json into `dir` (created if needed).
void emit_report(const RunReport& report, const std::string& dir);

struct ResultsRow {
  std::string method;
  std::string profile;
  std::size_t shots = 0;
  std::vector<double> per_seed;
  double mean = 0.0;
  double std = 0.0;
};

ResultsRow results_row(const RunReport& report);
std::string format_results_csv(const std::vector<ResultsRow>& rows);
std::vector<ResultsRow> parse_results_csv(const std::string& text);
std::vector<ResultsRow> read_results_csv(const std::string& path);

struct SweepPoint {
  double p_mask = 0.0;
  std::vector<double> per_seed;
  double mean = 0.0;
  double std = 0.0;
};

// 0.0, 0.1, ..., 1.0
std::vector<double> default_pmask_grid();

// Runs the unigram-masked strategy once per grid value.
std::vector<SweepPoint> run_pmask_sweep(RunConfig config, const std::vector<double>& grid,
                                        std::ostream* log = nullptr);

std::string format_sweep_csv(const std::vector<SweepPoint>& points);
void write_text_file(const std::string& path, const std::string& text);

// Paraphrases a sample of dataset sentences with each strategy and averages
// the per-sentence diversity reports. Uses a freshly initialised encoder
// unless params is given.
std::map<std::string, DiversityReport> diversity_by_strategy(const RunConfig& config,
                                                             const ExperimentContext& context,
                                                             const std::vector<Strategy>& strategies,
                                                             std::size_t n_sentences,
                                                             const EncoderParams* params = nullptr);

EvalResult evaluate_checkpoint(const RunConfig& config, const std::string& checkpoint_path, std::uint64_t seed,
                               SplitPart part);

}  // namespace protaugment
