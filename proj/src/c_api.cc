#include "protaugment/protaugment.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <streambuf>
#include <string>

#include "json.hpp"
#include "protaugment/experiment.hpp"
#include "protaugment/synth.hpp"

struct pa_config {
  protaugment::RunConfig config;
};

struct pa_report {
  protaugment::RunReport report;
};

namespace {

thread_local std::string g_last_error;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

pa_status fail(pa_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
pa_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return PA_OK;
  } catch (const IoError& e) {
    return fail(PA_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(PA_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(PA_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    return fail(msg.rfind("cannot ", 0) == 0 ? PA_ERR_IO : PA_ERR_DATA, msg);
  } catch (const std::exception& e) {
    return fail(PA_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(PA_ERR_RUNTIME, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw std::invalid_argument(std::string(what) + " must not be null");
}

// Forwards complete lines to a pa_log_fn.
class CallbackBuf : public std::streambuf {
 public:
  CallbackBuf(pa_log_fn fn, void* user) : fn_(fn), user_(user) {}

 protected:
  int overflow(int ch) override {
    if (ch == traits_type::eof()) return 0;
    if (ch == '\n') {
      fn_(line_.c_str(), user_);
      line_.clear();
    } else {
      line_.push_back(static_cast<char>(ch));
    }
    return ch;
  }

 private:
  pa_log_fn fn_;
  void* user_;
  std::string line_;
};

}  // namespace

extern "C" {

const char* pa_last_error(void) { return g_last_error.c_str(); }

const char* pa_status_name(pa_status status) {
  switch (status) {
    case PA_OK: return "ok";
    case PA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PA_ERR_IO: return "i/o error";
    case PA_ERR_DATA: return "data error";
    case PA_ERR_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

void pa_string_free(char* s) { std::free(s); }

pa_status pa_config_new(pa_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new pa_config();
  });
}

pa_status pa_config_load(pa_config** out, const char* path) {
  return guarded([&] {
    require(out, "out");
    require(path, "path");
    auto cfg = std::make_unique<pa_config>();
    cfg->config = protaugment::load_config_file(path);
    *out = cfg.release();
  });
}

pa_status pa_config_set(pa_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->config.set(key, value);
  });
}

pa_status pa_config_validate(const pa_config* config) {
  return guarded([&] {
    require(config, "config");
    config->config.validate();
  });
}

pa_status pa_config_to_text(const pa_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = dup_string(config->config.to_text());
  });
}

void pa_config_free(pa_config* config) { delete config; }

pa_status pa_train(const pa_config* config, pa_log_fn log, void* user, const char* checkpoint_dir,
                   pa_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    CallbackBuf buf(log, user);
    std::ostream log_stream(&buf);
    std::vector<protaugment::EncoderParams> best;
    auto report = std::make_unique<pa_report>();
    const protaugment::ExperimentContext ctx = protaugment::prepare_context(config->config);
    report->report = protaugment::run_experiment(config->config, log != nullptr ? &log_stream : nullptr,
                                                 checkpoint_dir != nullptr ? &best : nullptr, &ctx);
    if (checkpoint_dir != nullptr) {
      std::error_code ec;
      std::filesystem::create_directories(checkpoint_dir, ec);
      if (ec) throw IoError(std::string("cannot create ") + checkpoint_dir + ": " + ec.message());
      for (std::size_t i = 0; i < best.size(); ++i) {
        const auto path = std::filesystem::path(checkpoint_dir) /
                          ("seed_" + std::to_string(config->config.seeds[i]) + ".ckpt");
        protaugment::save_checkpoint(path.string(), ctx.vocab, best[i]);
      }
    }
    *out = report.release();
  });
}

pa_status pa_report_write(const pa_report* report, const char* dir) {
  return guarded([&] {
    require(report, "report");
    require(dir, "dir");
    protaugment::emit_report(report->report, dir);
  });
}

pa_status pa_report_to_json(const pa_report* report, char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = dup_string(protaugment::report_to_json(report->report));
  });
}

double pa_report_mean(const pa_report* report) { return report ? report->report.mean_accuracy : 0.0; }
double pa_report_std(const pa_report* report) { return report ? report->report.std_accuracy : 0.0; }
size_t pa_report_seed_count(const pa_report* report) { return report ? report->report.seeds.size() : 0; }

pa_status pa_report_seed_accuracy(const pa_report* report, size_t index, double* out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = report->report.seeds.at(index).test_accuracy;
  });
}

void pa_report_free(pa_report* report) { delete report; }

pa_status pa_evaluate_checkpoint(const pa_config* config, const char* checkpoint, uint64_t seed, const char* part,
                                 double* mean_accuracy, size_t* episodes) {
  return guarded([&] {
    require(config, "config");
    require(checkpoint, "checkpoint");
    require(part, "part");
    require(mean_accuracy, "mean_accuracy");
    const auto result = protaugment::evaluate_checkpoint(config->config, checkpoint, seed,
                                                         protaugment::parse_split_part(part));
    *mean_accuracy = result.mean_accuracy;
    if (episodes != nullptr) *episodes = result.episode_count;
  });
}

pa_status pa_paraphrase_file(const pa_config* config, const char* input_path, const char* output_path) {
  return guarded([&] {
    require(config, "config");
    require(input_path, "input_path");
    const auto& cfg = config->config;
    if (cfg.decode.strategy == protaugment::Strategy::kNone) {
      throw std::invalid_argument("paraphrasing needs a strategy other than none");
    }
    std::ifstream in(input_path);
    if (!in) throw IoError(std::string("cannot open ") + input_path);
    std::vector<std::string> sentences;
    for (std::string line; std::getline(in, line);) {
      if (!protaugment::tokenize(line).empty()) sentences.push_back(line);
    }

    protaugment::SynonymTable synonyms = cfg.synonyms.empty()
                                             ? protaugment::builtin_synonyms()
                                             : protaugment::load_synonym_table(protaugment::resolve_data_path(cfg.synonyms));
    std::vector<protaugment::Tokens> corpus;
    if (!cfg.dataset.empty()) {
      const auto dataset = protaugment::load_dataset(protaugment::resolve_data_path(cfg.dataset));
      for (const auto& r : dataset.records()) corpus.push_back(r.tokens);
    }
    for (const auto& s : sentences) corpus.push_back(protaugment::tokenize(s));
    const protaugment::ToySynonymLm lm(corpus, synonyms);
    protaugment::Rng rng(protaugment::derive_seed(cfg.decode.seed, 6));

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (output_path != nullptr) {
      file.open(output_path, std::ios::trunc);
      if (!file) throw IoError(std::string("cannot write ") + output_path);
      out = &file;
    }
    for (const auto& s : sentences) {
      nlohmann::ordered_json j;
      j["source"] = s;
      j["paraphrases"] = protaugment::generate_paraphrases(lm, synonyms, s, cfg.paraphrases_per_sentence,
                                                           cfg.decode.strategy, cfg.decode, rng);
      *out << j.dump() << '\n';
    }
    out->flush();
    if (!*out) throw IoError("failed writing paraphrases");
  });
}

pa_status pa_diversity(const pa_config* config, const char* strategies, size_t n_sentences, char** json_out) {
  return guarded([&] {
    require(config, "config");
    require(strategies, "strategies");
    require(json_out, "json_out");
    std::vector<protaugment::Strategy> list;
    std::stringstream ss(strategies);
    for (std::string name; std::getline(ss, name, ',');) {
      if (!name.empty()) list.push_back(protaugment::parse_strategy(name));
    }
    if (list.empty()) throw std::invalid_argument("no strategies given");
    const auto ctx = protaugment::prepare_context(config->config);
    const auto reports = protaugment::diversity_by_strategy(config->config, ctx, list, n_sentences);
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto s : list) {
      const auto it = reports.find(protaugment::to_string(s));
      if (it == reports.end()) continue;
      j[it->first] = {{"dist2", it->second.dist2},
                      {"bleu", it->second.bleu_vs_source},
                      {"use", it->second.mean_pairwise_similarity}};
    }
    *json_out = dup_string(j.dump(2) + "\n");
  });
}

pa_status pa_synth_data(size_t n_classes, size_t sentences_per_class, uint64_t seed, const char* path,
                        const char* synonyms_path) {
  return guarded([&] {
    require(path, "path");
    protaugment::SynthSpec spec;
    spec.n_classes = n_classes;
    spec.sentences_per_class = sentences_per_class;
    spec.seed = seed;
    protaugment::write_synthetic_dataset(spec, path);
    if (synonyms_path != nullptr) protaugment::write_synonym_table(protaugment::builtin_synonyms(), synonyms_path);
  });
}

pa_status pa_pmask_sweep(const pa_config* config, pa_log_fn log, void* user, const char* csv_path) {
  return guarded([&] {
    require(config, "config");
    require(csv_path, "csv_path");
    CallbackBuf buf(log, user);
    std::ostream log_stream(&buf);
    const auto points = protaugment::run_pmask_sweep(config->config, protaugment::default_pmask_grid(),
                                                     log != nullptr ? &log_stream : nullptr);
    protaugment::write_text_file(csv_path, protaugment::format_sweep_csv(points));
  });
}

pa_status pa_results_summary(const char* results_csv, char** out) {
  return guarded([&] {
    require(results_csv, "results_csv");
    require(out, "out");
    const auto rows = protaugment::read_results_csv(results_csv);
    std::string text;
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %-8s %5s %8s %8s %s\n", "method", "profile", "shots", "mean", "std",
                  "seeds");
    text += line;
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "%-12s %-8s %5zu %8.4f %8.4f %zu\n", r.method.c_str(), r.profile.c_str(),
                    r.shots, r.mean, r.std, r.per_seed.size());
      text += line;
    }
    *out = dup_string(text);
  });
}

}  // extern "C"
