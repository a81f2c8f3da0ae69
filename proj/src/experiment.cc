#include "protaugment/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "protaugment/consistency.hpp"
#include "protaugment/synth.hpp"

namespace protaugment {
namespace {

// Stream tags for derive_seed.
enum StreamTag : std::uint64_t {
  kSplitStream = 1,
  kProfileStream,
  kInitStream,
  kEpisodeStream,
  kUnlabeledStream,
  kParaphraseStream,
  kValidStream,
  kTestStream,
  kDiversityStream,
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string profile_name(DataProfile p) { return p == DataProfile::kLow ? "low" : "full"; }

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

ExperimentContext prepare_context(const RunConfig& config) {
  ExperimentContext ctx;
  ctx.dataset = load_dataset(resolve_data_path(config.dataset));
  ctx.synonyms = config.synonyms.empty() ? builtin_synonyms() : load_synonym_table(resolve_data_path(config.synonyms));
  std::vector<Tokens> corpus;
  corpus.reserve(ctx.dataset.size());
  for (const auto& r : ctx.dataset.records()) corpus.push_back(r.tokens);
  ctx.lm = std::make_unique<ToySynonymLm>(corpus, ctx.synonyms);
  for (const auto& r : ctx.dataset.records()) {
    for (const auto& t : r.tokens) ctx.vocab.add(t);
  }
  for (const auto& [word, syns] : ctx.synonyms) {
    ctx.vocab.add(word);
    for (const auto& s : syns) ctx.vocab.add(s);
  }
  return ctx;
}

SeedOutcome run_seed(const RunConfig& config, const ExperimentContext& ctx, std::uint64_t seed,
                     std::ostream* log) {
  config.validate();
  const Dataset& full = ctx.dataset;
  const ClassSplit split = split_classes(full, config.split, derive_seed(seed, kSplitStream), config.group_by_domain);
  const Dataset train_data = config.profile == DataProfile::kLow
                                 ? restrict_low_profile(full, split, config.low_samples_per_class,
                                                        derive_seed(seed, kProfileStream))
                                 : full;

  Rng init_rng(derive_seed(seed, kInitStream));
  EncoderParams params = init_encoder({ctx.vocab.size(), config.embed_dim, config.output_dim}, init_rng);
  AdamOptimizer optimizer({config.learning_rate, 0.9, 0.999, 1e-8}, params.shape());

  Rng episode_rng(derive_seed(seed, kEpisodeStream));
  Rng unlabeled_rng(derive_seed(seed, kUnlabeledStream));
  Rng paraphrase_rng(derive_seed(seed, kParaphraseStream ^ config.decode.seed));
  const std::vector<std::string> pool = all_texts(full);

  EpisodeShape supervised_shape = config.episode;
  supervised_shape.unlabeled = 0;
  EpisodeShape eval_shape = supervised_shape;
  const AnnealSchedule schedule{config.alpha, config.max_episodes};
  const Strategy strategy = config.decode.strategy;
  std::unordered_map<std::string, std::vector<std::string>> cache;

  SeedOutcome out;
  SeedResult& res = out.result;
  res.seed = seed;
  out.best_params = params;
  double best_valid = -1.0;
  std::size_t since_best = 0;
  CurvePoint window;
  std::size_t window_count = 0;

  for (std::size_t step = 0; step < config.max_episodes; ++step) {
    const Episode episode = sample_episode(train_data, split, SplitPart::kTrain, supervised_shape, episode_rng);
    UnlabeledBatch batch;
    if (strategy != Strategy::kNone) {
      for (std::size_t pick : sample_without_replacement(unlabeled_rng, pool.size(), config.episode.unlabeled)) {
        const std::string& text = pool[pick];
        batch.sentences.push_back(text);
        if (config.cache_paraphrases) {
          auto it = cache.find(text);
          if (it == cache.end()) {
            it = cache.emplace(text, generate_paraphrases(*ctx.lm, ctx.synonyms, text,
                                                          config.paraphrases_per_sentence, strategy,
                                                          config.decode, paraphrase_rng))
                     .first;
          }
          batch.paraphrases.push_back(it->second);
        } else {
          batch.paraphrases.push_back(generate_paraphrases(*ctx.lm, ctx.synonyms, text,
                                                           config.paraphrases_per_sentence, strategy,
                                                           config.decode, paraphrase_rng));
        }
      }
    }
    const StepLosses losses = combined_training_step(episode, strategy == Strategy::kNone ? nullptr : &batch,
                                                     params, optimizer, ctx.vocab, schedule, step,
                                                     config.distance);
    if (log != nullptr) {
      std::lock_guard<std::mutex> lock(log_mutex());
      *log << "seed=" << seed << ' ' << format_step_log(step, losses) << '\n';
    }
    window.supervised += losses.supervised;
    window.unsupervised += losses.unsupervised;
    window.weight += losses.weight;
    window.combined += losses.combined;
    ++window_count;
    res.episodes_run = step + 1;

    if ((step + 1) % config.eval_every != 0) continue;
    Rng valid_rng(derive_seed(seed, kValidStream));
    const EvalResult valid = evaluate(params, ctx.vocab, full, split, SplitPart::kValid, eval_shape,
                                      config.n_eval_episodes, valid_rng, config.distance);
    ++res.evaluations;
    res.valid_episodes_evaluated += valid.episode_count;
    const double n = static_cast<double>(window_count);
    res.curve.push_back({step + 1, window.supervised / n, window.unsupervised / n, window.weight / n,
                         window.combined / n, valid.mean_accuracy});
    window = CurvePoint{};
    window_count = 0;
    if (valid.mean_accuracy > best_valid) {
      best_valid = valid.mean_accuracy;
      since_best = 0;
      out.best_params = params;
      res.best_episode = step + 1;
    } else {
      ++since_best;
    }
    if (since_best >= config.patience) {
      res.stopped_early = true;
      break;
    }
  }
  if (res.evaluations == 0) out.best_params = params;

  Rng test_rng(derive_seed(seed, kTestStream));
  const EvalResult test = evaluate(out.best_params, ctx.vocab, full, split, SplitPart::kTest, eval_shape,
                                   config.n_eval_episodes, test_rng, config.distance);
  res.test_accuracy = test.mean_accuracy;
  res.test_episodes_evaluated = test.episode_count;
  res.best_valid_accuracy = best_valid < 0.0 ? 0.0 : best_valid;
  return out;
}

MeanStd mean_and_std(const std::vector<double>& values) {
  MeanStd ms;
  if (values.empty()) return ms;
  for (double v : values) ms.mean += v;
  ms.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - ms.mean) * (v - ms.mean);
  ms.std = std::sqrt(var / static_cast<double>(values.size()));
  return ms;
}

RunReport run_experiment(const RunConfig& config, std::ostream* log, std::vector<EncoderParams>* best_params,
                         const ExperimentContext* context) {
  config.validate();
  ExperimentContext owned;
  if (context == nullptr) {
    owned = prepare_context(config);
    context = &owned;
  }
  // Surface sampling problems (too few classes, etc.) before any training.
  {
    const ClassSplit split = split_classes(context->dataset, config.split, derive_seed(config.seeds.front(), kSplitStream),
                                           config.group_by_domain);
    for (SplitPart part : {SplitPart::kTrain, SplitPart::kValid, SplitPart::kTest}) {
      if (split.part(part).size() < config.episode.ways) {
        throw std::invalid_argument(std::string("split part '") + to_string(part) + "' has only " +
                                    std::to_string(split.part(part).size()) + " classes for " +
                                    std::to_string(config.episode.ways) + "-way episodes");
      }
    }
  }

  std::vector<SeedOutcome> outcomes(config.seeds.size());
  std::vector<std::exception_ptr> errors(config.seeds.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, config.seeds.size()));
  auto work = [&](std::size_t worker) {
    for (std::size_t i = worker; i < config.seeds.size(); i += workers) {
      try {
        outcomes[i] = run_seed(config, *context, config.seeds[i], log);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RunReport report;
  report.method = to_string(config.decode.strategy);
  report.profile = profile_name(config.profile);
  report.ways = config.episode.ways;
  report.shots = config.episode.shots;
  report.config_text = config.to_text();
  std::vector<double> accs;
  for (auto& o : outcomes) {
    accs.push_back(o.result.test_accuracy);
    report.seeds.push_back(o.result);
    if (best_params != nullptr) best_params->push_back(std::move(o.best_params));
  }
  const MeanStd ms = mean_and_std(accs);
  report.mean_accuracy = ms.mean;
  report.std_accuracy = ms.std;
  if (config.diversity_sample > 0 && config.decode.strategy != Strategy::kNone) {
    report.diversity = diversity_by_strategy(config, *context, {config.decode.strategy}, config.diversity_sample);
  }
  return report;
}

std::string report_to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  j["profile"] = report.profile;
  j["ways"] = report.ways;
  j["shots"] = report.shots;
  j["mean_accuracy"] = report.mean_accuracy;
  j["std_accuracy"] = report.std_accuracy;
  auto& seeds = j["seeds"] = nlohmann::ordered_json::array();
  for (const auto& s : report.seeds) {
    nlohmann::ordered_json e;
    e["seed"] = s.seed;
    e["test_accuracy"] = s.test_accuracy;
    e["best_valid_accuracy"] = s.best_valid_accuracy;
    e["best_episode"] = s.best_episode;
    e["episodes_run"] = s.episodes_run;
    e["evaluations"] = s.evaluations;
    e["valid_episodes_evaluated"] = s.valid_episodes_evaluated;
    e["test_episodes_evaluated"] = s.test_episodes_evaluated;
    e["stopped_early"] = s.stopped_early;
    auto& curve = e["curve"] = nlohmann::ordered_json::array();
    for (const auto& p : s.curve) {
      curve.push_back({{"episode", p.episode},
                       {"supervised", p.supervised},
                       {"unsupervised", p.unsupervised},
                       {"weight", p.weight},
                       {"combined", p.combined},
                       {"valid_accuracy", p.valid_accuracy}});
    }
    seeds.push_back(std::move(e));
  }
  auto& div = j["diversity"] = nlohmann::ordered_json::object();
  for (const auto& [name, r] : report.diversity) {
    div[name] = {{"dist2", r.dist2}, {"bleu", r.bleu_vs_source}, {"use", r.mean_pairwise_similarity}};
  }
  j["config"] = report.config_text;
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

ResultsRow results_row(const RunReport& report) {
  ResultsRow row{report.method, report.profile, report.shots, {}, report.mean_accuracy, report.std_accuracy};
  for (const auto& s : report.seeds) row.per_seed.push_back(s.test_accuracy);
  return row;
}

std::string format_results_csv(const std::vector<ResultsRow>& rows) {
  std::string out = "method,profile,shots,per_seed,mean,std\n";
  for (const auto& r : rows) {
    out += r.method + "," + r.profile + "," + std::to_string(r.shots) + ",";
    for (std::size_t i = 0; i < r.per_seed.size(); ++i) out += (i ? ";" : "") + format_double(r.per_seed[i]);
    out += "," + format_double(r.mean) + "," + format_double(r.std) + "\n";
  }
  return out;
}

std::vector<ResultsRow> parse_results_csv(const std::string& text) {
  std::vector<ResultsRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 6) throw std::runtime_error("results.csv line " + std::to_string(line_no) + ": expected 6 fields");
    ResultsRow row;
    row.method = fields[0];
    row.profile = fields[1];
    row.shots = std::stoul(fields[2]);
    std::stringstream seeds(fields[3]);
    for (std::string v; std::getline(seeds, v, ';');) row.per_seed.push_back(std::strtod(v.c_str(), nullptr));
    row.mean = std::strtod(fields[4].c_str(), nullptr);
    row.std = std::strtod(fields[5].c_str(), nullptr);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ResultsRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_results_csv(buf.str());
}

void emit_report(const RunReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create report directory " + dir + ": " + ec.message());
  const std::filesystem::path base(dir);
  write_text_file((base / "results.csv").string(), format_results_csv({results_row(report)}));
  std::string curves = "seed,episode,supervised,unsupervised,weight,combined,valid_accuracy\n";
  for (const auto& s : report.seeds) {
    for (const auto& p : s.curve) {
      curves += std::to_string(s.seed) + "," + std::to_string(p.episode) + "," + format_double(p.supervised) + "," +
                format_double(p.unsupervised) + "," + format_double(p.weight) + "," + format_double(p.combined) +
                "," + format_double(p.valid_accuracy) + "\n";
    }
  }
  write_text_file((base / "curves.csv").string(), curves);
  write_text_file((base / "report.json").string(), report_to_json(report));
}

std::vector<double> default_pmask_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<double>(i) / 10.0);
  return grid;
}

std::vector<SweepPoint> run_pmask_sweep(RunConfig config, const std::vector<double>& grid, std::ostream* log) {
  config.decode.strategy = Strategy::kDbsUnigram;
  config.validate();
  const ExperimentContext ctx = prepare_context(config);
  std::vector<SweepPoint> points;
  for (double p : grid) {
    config.decode.p_mask = p;
    const RunReport report = run_experiment(config, log, nullptr, &ctx);
    SweepPoint point{p, {}, report.mean_accuracy, report.std_accuracy};
    for (const auto& s : report.seeds) point.per_seed.push_back(s.test_accuracy);
    points.push_back(std::move(point));
  }
  return points;
}

std::string format_sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "p_mask,mean_accuracy,std_accuracy,per_seed\n";
  for (const auto& p : points) {
    out += format_double(p.p_mask) + "," + format_double(p.mean) + "," + format_double(p.std) + ",";
    for (std::size_t i = 0; i < p.per_seed.size(); ++i) out += (i ? ";" : "") + format_double(p.per_seed[i]);
    out += "\n";
  }
  return out;
}

std::map<std::string, DiversityReport> diversity_by_strategy(const RunConfig& config,
                                                             const ExperimentContext& ctx,
                                                             const std::vector<Strategy>& strategies,
                                                             std::size_t n_sentences,
                                                             const EncoderParams* params) {
  EncoderParams fresh;
  if (params == nullptr) {
    Rng init_rng(derive_seed(config.seeds.front(), kInitStream));
    fresh = init_encoder({ctx.vocab.size(), config.embed_dim, config.output_dim}, init_rng);
    params = &fresh;
  }
  Rng pick_rng(derive_seed(config.decode.seed, kDiversityStream));
  const auto picks = sample_without_replacement(pick_rng, ctx.dataset.size(), std::min(n_sentences, ctx.dataset.size()));
  std::map<std::string, DiversityReport> out;
  for (Strategy s : strategies) {
    if (s == Strategy::kNone) continue;
    Rng rng(derive_seed(config.decode.seed, kParaphraseStream));
    std::vector<DiversityReport> reports;
    for (std::size_t i : picks) {
      const std::string& text = ctx.dataset.records()[i].text;
      const auto paraphrases =
          generate_paraphrases(*ctx.lm, ctx.synonyms, text, config.paraphrases_per_sentence, s, config.decode, rng);
      reports.push_back(diversity_report(text, paraphrases, *params, ctx.vocab));
    }
    out[to_string(s)] = average_reports(reports);
  }
  return out;
}

EvalResult evaluate_checkpoint(const RunConfig& config, const std::string& checkpoint_path, std::uint64_t seed,
                               SplitPart part) {
  const Dataset dataset = load_dataset(resolve_data_path(config.dataset));
  Vocabulary vocab;
  EncoderParams params;
  load_checkpoint(checkpoint_path, vocab, params);
  const ClassSplit split = split_classes(dataset, config.split, derive_seed(seed, kSplitStream), config.group_by_domain);
  EpisodeShape shape = config.episode;
  shape.unlabeled = 0;
  Rng rng(derive_seed(seed, part == SplitPart::kTest ? kTestStream : kValidStream));
  return evaluate(params, vocab, dataset, split, part, shape, config.n_eval_episodes, rng, config.distance);
}

}  // namespace protaugment
