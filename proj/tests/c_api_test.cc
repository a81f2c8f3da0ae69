#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "protaugment/protaugment.h"

namespace {

namespace fs = std::filesystem;

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "pa_c_api_test";
  fs::create_directories(dir);
  return dir;
}

std::string dataset_path() {
  static const std::string path = [] {
    const auto p = (work_dir() / "synth.jsonl").string();
    EXPECT_EQ(pa_synth_data(20, 30, 0, p.c_str(), nullptr), PA_OK) << pa_last_error();
    return p;
  }();
  return path;
}

struct Config {
  pa_config* ptr = nullptr;
  Config() {
    EXPECT_EQ(pa_config_new(&ptr), PA_OK);
    set("dataset", dataset_path());
  }
  ~Config() { pa_config_free(ptr); }
  void set(const std::string& k, const std::string& v) {
    ASSERT_EQ(pa_config_set(ptr, k.c_str(), v.c_str()), PA_OK) << pa_last_error();
  }
};

TEST(CApi, ErrorsCarryMessages) {
  pa_config* cfg = nullptr;
  ASSERT_EQ(pa_config_new(&cfg), PA_OK);
  EXPECT_EQ(pa_config_set(cfg, "no_such_key", "1"), PA_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(pa_last_error()).find("no_such_key"), std::string::npos);
  EXPECT_EQ(pa_config_validate(cfg), PA_ERR_INVALID_ARGUMENT);
  pa_config_free(cfg);
  EXPECT_EQ(pa_config_load(&cfg, "/nonexistent/pa.cfg"), PA_ERR_IO);
  EXPECT_EQ(pa_config_new(nullptr), PA_ERR_INVALID_ARGUMENT);
  EXPECT_STREQ(pa_status_name(PA_OK), "ok");
}

TEST(CApi, ConfigText) {
  Config c;
  c.set("p_mask", "0.3");
  char* text = nullptr;
  ASSERT_EQ(pa_config_to_text(c.ptr, &text), PA_OK);
  EXPECT_NE(std::string(text).find("p_mask = 0.29999999999999999"), std::string::npos) << text;
  pa_string_free(text);
}

TEST(CApi, TrainWriteReportAndEvaluateCheckpoint) {
  Config c;
  c.set("strategy", "none");
  c.set("max_episodes", "200");
  c.set("n_eval_episodes", "40");
  c.set("seeds", "0,1");
  const auto ckpt = work_dir() / "ckpt";
  int lines = 0;
  pa_report* rep = nullptr;
  ASSERT_EQ(pa_train(c.ptr, [](const char*, void* u) { ++*static_cast<int*>(u); }, &lines, ckpt.c_str(), &rep),
            PA_OK)
      << pa_last_error();
  EXPECT_EQ(lines, 400);
  ASSERT_EQ(pa_report_seed_count(rep), 2u);
  double a0 = 0, a1 = 0;
  ASSERT_EQ(pa_report_seed_accuracy(rep, 0, &a0), PA_OK);
  ASSERT_EQ(pa_report_seed_accuracy(rep, 1, &a1), PA_OK);
  EXPECT_DOUBLE_EQ(pa_report_mean(rep), (a0 + a1) / 2);
  EXPECT_EQ(pa_report_seed_accuracy(rep, 5, &a0), PA_ERR_INVALID_ARGUMENT);
  const auto out = work_dir() / "report";
  ASSERT_EQ(pa_report_write(rep, out.c_str()), PA_OK);
  char* json = nullptr;
  ASSERT_EQ(pa_report_to_json(rep, &json), PA_OK);
  EXPECT_EQ(nlohmann::json::parse(json)["seeds"].size(), 2u);
  pa_string_free(json);
  pa_report_free(rep);

  char* summary = nullptr;
  ASSERT_EQ(pa_results_summary((out / "results.csv").c_str(), &summary), PA_OK);
  EXPECT_NE(std::string(summary).find("none"), std::string::npos);
  pa_string_free(summary);

  double acc = -1;
  std::size_t episodes = 0;
  ASSERT_EQ(pa_evaluate_checkpoint(c.ptr, (ckpt / "seed_1.ckpt").c_str(), 1, "test", &acc, &episodes), PA_OK)
      << pa_last_error();
  EXPECT_EQ(episodes, 40u);
  EXPECT_DOUBLE_EQ(acc, a1);
  EXPECT_EQ(pa_evaluate_checkpoint(c.ptr, (ckpt / "seed_1.ckpt").c_str(), 1, "bogus", &acc, nullptr),
            PA_ERR_INVALID_ARGUMENT);
}

TEST(CApi, ParaphraseFileWritesJsonLines) {
  Config c;
  c.set("strategy", "dbs_bigram");
  const auto in = work_dir() / "sentences.txt";
  std::ofstream(in) << "please check my card\n\ncan you cancel my order\n";
  const auto out = work_dir() / "paraphrases.jsonl";
  ASSERT_EQ(pa_paraphrase_file(c.ptr, in.c_str(), out.c_str()), PA_OK) << pa_last_error();
  std::ifstream f(out);
  std::string line;
  int n = 0;
  while (std::getline(f, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j["source"].is_string());
    EXPECT_EQ(j["paraphrases"].size(), 5u);
    ++n;
  }
  EXPECT_EQ(n, 2);
  c.set("strategy", "none");
  EXPECT_EQ(pa_paraphrase_file(c.ptr, in.c_str(), out.c_str()), PA_ERR_INVALID_ARGUMENT);
}

TEST(CApi, DiversityJson) {
  Config c;
  char* json = nullptr;
  ASSERT_EQ(pa_diversity(c.ptr, "stub_bt,dbs_unigram", 20, &json), PA_OK) << pa_last_error();
  const auto j = nlohmann::json::parse(json);
  pa_string_free(json);
  EXPECT_TRUE(j.contains("stub_bt"));
  EXPECT_TRUE(j["dbs_unigram"].contains("dist2"));
  EXPECT_EQ(pa_diversity(c.ptr, "beam", 20, &json), PA_ERR_INVALID_ARGUMENT);
}

TEST(CApi, MissingDatasetIsIoError) {
  pa_config* cfg = nullptr;
  ASSERT_EQ(pa_config_new(&cfg), PA_OK);
  pa_config_set(cfg, "dataset", "/nonexistent/x.jsonl");
  pa_report* rep = nullptr;
  EXPECT_EQ(pa_train(cfg, nullptr, nullptr, nullptr, &rep), PA_ERR_IO);
  EXPECT_EQ(rep, nullptr);
  pa_config_free(cfg);
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(PA_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("synth-data -o " + (work_dir() / "cli.jsonl").string()), 0);
  EXPECT_NE(run_cli("train -d /nonexistent/x.jsonl"), 0);
  EXPECT_NE(run_cli("train -d " + dataset_path() + " --set bogus=1"), 0);
  EXPECT_NE(run_cli("frobnicate"), 0);
  EXPECT_EQ(run_cli("diversity -d " + dataset_path() + " -n 5 --strategies dbs"), 0);
}

TEST(Cli, DataDirectoryFromEnvironment) {
  const auto dir = work_dir() / "env_data";
  fs::create_directories(dir);
  fs::copy_file(dataset_path(), dir / "corpus.jsonl", fs::copy_options::overwrite_existing);
  const std::string cmd = "PROTAUGMENT_DATA_DIR=" + dir.string() + " " + PA_CLI_PATH +
                          " diversity -d corpus.jsonl -n 5 --strategies stub_bt >/dev/null 2>&1";
  const int rc = std::system(("cd / && " + cmd).c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 0);
}

}  // namespace
