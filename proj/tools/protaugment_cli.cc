// Command-line front end. Talks to the library only through the C interface.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "protaugment/protaugment.h"

namespace {

struct Failure {
  int code;
};

void check(pa_status status, const std::string& what) {
  if (status == PA_OK) return;
  std::cerr << "protaugment: " << what << ": " << pa_last_error() << " (" << pa_status_name(status) << ")\n";
  throw Failure{static_cast<int>(status) + 1};
}

struct ConfigOptions {
  std::string file;
  std::string dataset;
  std::string strategy;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
  cmd->add_option("-c,--config", opts.file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("-d,--dataset", opts.dataset, "JSONL dataset (relative paths also searched in $PROTAUGMENT_DATA_DIR)");
  cmd->add_option("-s,--strategy", opts.strategy, "none, stub_bt, dbs, dbs_unigram or dbs_bigram");
  cmd->add_option("--set", opts.overrides, "override a config key, KEY=VALUE (repeatable)");
}

pa_config* build_config(const ConfigOptions& opts) {
  pa_config* cfg = nullptr;
  if (opts.file.empty()) {
    check(pa_config_new(&cfg), "config");
  } else {
    check(pa_config_load(&cfg, opts.file.c_str()), "loading " + opts.file);
  }
  auto set = [&](const std::string& key, const std::string& value) {
    pa_status st = pa_config_set(cfg, key.c_str(), value.c_str());
    if (st != PA_OK) pa_config_free(cfg);
    check(st, "setting " + key);
  };
  if (!opts.dataset.empty()) set("dataset", opts.dataset);
  if (!opts.strategy.empty()) set("strategy", opts.strategy);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      pa_config_free(cfg);
      std::cerr << "protaugment: --set expects KEY=VALUE, got '" << kv << "'\n";
      throw Failure{2};
    }
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

struct ConfigHandle {
  pa_config* ptr;
  ~ConfigHandle() { pa_config_free(ptr); }
};

void print_log_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

void print_and_free(char* text) {
  std::fputs(text, stdout);
  pa_string_free(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot intent classification with paraphrase-consistency training"};
  app.require_subcommand(1);

  ConfigOptions train_cfg;
  std::string train_out = "results";
  std::string train_ckpt;
  bool train_verbose = false;
  auto* train = app.add_subcommand("train", "train over all configured seeds and write a report");
  add_config_options(train, train_cfg);
  train->add_option("-o,--out", train_out, "report directory");
  train->add_option("--checkpoints", train_ckpt, "directory for best-validation checkpoints");
  train->add_flag("-v,--verbose", train_verbose, "print per-step losses to stderr");

  ConfigOptions eval_cfg;
  std::string eval_ckpt;
  std::uint64_t eval_seed = 0;
  std::string eval_part = "test";
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on one split part");
  add_config_options(evaluate, eval_cfg);
  evaluate->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--seed", eval_seed, "seed that produced the class split");
  evaluate->add_option("--part", eval_part, "train, valid or test");

  ConfigOptions para_cfg;
  std::string para_in;
  std::string para_out;
  auto* paraphrase = app.add_subcommand("paraphrase", "paraphrase sentences, one per line, to JSON lines");
  add_config_options(paraphrase, para_cfg);
  paraphrase->add_option("-i,--input", para_in, "sentence file")->required()->check(CLI::ExistingFile);
  paraphrase->add_option("-o,--output", para_out, "output file (default stdout)");

  ConfigOptions div_cfg;
  std::string div_strategies = "stub_bt,dbs,dbs_bigram,dbs_unigram";
  std::size_t div_n = 200;
  auto* diversity = app.add_subcommand("diversity", "dist-2, BLEU and embedding similarity per strategy");
  add_config_options(diversity, div_cfg);
  diversity->add_option("--strategies", div_strategies, "comma separated strategies");
  diversity->add_option("-n,--sentences", div_n, "number of dataset sentences to paraphrase");

  std::size_t synth_classes = 20;
  std::size_t synth_per_class = 30;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  std::string synth_syn;
  auto* synth = app.add_subcommand("synth-data", "write the synthetic intent corpus");
  synth->add_option("--classes", synth_classes, "number of classes");
  synth->add_option("--per-class", synth_per_class, "sentences per class");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("-o,--output", synth_out, "JSONL output")->required();
  synth->add_option("--synonyms-out", synth_syn, "also write the synonym table as JSON");

  ConfigOptions report_cfg;
  std::string report_results;
  std::string report_sweep;
  bool report_verbose = false;
  auto* report = app.add_subcommand("report", "summarise results.csv or run the p_mask sweep");
  add_config_options(report, report_cfg);
  auto* results_opt = report->add_option("--results", report_results, "results.csv to summarise");
  auto* sweep_opt = report->add_option("--pmask-sweep", report_sweep, "write the 11-point p_mask series to this CSV");
  report->add_flag("-v,--verbose", report_verbose, "print per-step losses to stderr");
  results_opt->excludes(sweep_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ConfigHandle cfg{build_config(train_cfg)};
      pa_report* rep = nullptr;
      check(pa_train(cfg.ptr, train_verbose ? print_log_line : nullptr, nullptr,
                     train_ckpt.empty() ? nullptr : train_ckpt.c_str(), &rep),
            "train");
      const pa_status st = pa_report_write(rep, train_out.c_str());
      const std::size_t n = pa_report_seed_count(rep);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        pa_report_seed_accuracy(rep, i, &acc);
        std::printf("seed[%zu] test_accuracy=%.4f\n", i, acc);
      }
      std::printf("mean=%.4f std=%.4f\n", pa_report_mean(rep), pa_report_std(rep));
      pa_report_free(rep);
      check(st, "writing report to " + train_out);
    } else if (*evaluate) {
      ConfigHandle cfg{build_config(eval_cfg)};
      double acc = 0.0;
      std::size_t episodes = 0;
      check(pa_evaluate_checkpoint(cfg.ptr, eval_ckpt.c_str(), eval_seed, eval_part.c_str(), &acc, &episodes),
            "evaluate");
      std::printf("part=%s episodes=%zu accuracy=%.4f\n", eval_part.c_str(), episodes, acc);
    } else if (*paraphrase) {
      ConfigHandle cfg{build_config(para_cfg)};
      if (para_cfg.strategy.empty()) check(pa_config_set(cfg.ptr, "strategy", "dbs_unigram"), "strategy");
      check(pa_paraphrase_file(cfg.ptr, para_in.c_str(), para_out.empty() ? nullptr : para_out.c_str()),
            "paraphrase");
    } else if (*diversity) {
      ConfigHandle cfg{build_config(div_cfg)};
      char* json = nullptr;
      check(pa_diversity(cfg.ptr, div_strategies.c_str(), div_n, &json), "diversity");
      print_and_free(json);
    } else if (*synth) {
      check(pa_synth_data(synth_classes, synth_per_class, synth_seed, synth_out.c_str(),
                          synth_syn.empty() ? nullptr : synth_syn.c_str()),
            "synth-data");
    } else if (*report) {
      if (!report_sweep.empty()) {
        ConfigHandle cfg{build_config(report_cfg)};
        check(pa_pmask_sweep(cfg.ptr, report_verbose ? print_log_line : nullptr, nullptr, report_sweep.c_str()),
              "p_mask sweep");
        std::printf("wrote %s\n", report_sweep.c_str());
      } else if (!report_results.empty()) {
        char* text = nullptr;
        check(pa_results_summary(report_results.c_str(), &text), "report");
        print_and_free(text);
      } else {
        std::cerr << "protaugment: report needs --results or --pmask-sweep\n";
        return 2;
      }
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
