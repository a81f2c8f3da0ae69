#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "protaugment/episodes.hpp"
#include "protaugment/synth.hpp"

namespace protaugment {
namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream(path) << content;
  return path;
}

Dataset make_dataset(std::size_t n_classes, std::size_t per_class,
                     std::map<std::string, std::string> domains = {}) {
  std::vector<Record> records;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::string text = "class" + std::to_string(c) + " item" + std::to_string(i);
      records.push_back({text, "c" + std::to_string(c), tokenize(text)});
    }
  }
  return Dataset(std::move(records), std::move(domains));
}

TEST(LoadDataset, ReadsRecords) {
  const auto path = write_temp("pa_two.jsonl",
                               "{\"text\": \"Hello there\", \"label\": \"greet\"}\n\n"
                               "{\"text\": \"bye\", \"label\": \"leave\", \"domain\": \"social\"}\n");
  const Dataset d = load_dataset(path);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.classes(), (std::vector<std::string>{"greet", "leave"}));
  EXPECT_EQ(d.records()[0].tokens, (Tokens{"hello", "there"}));
  EXPECT_EQ(d.domain_of("leave"), std::optional<std::string>("social"));
}

TEST(LoadDataset, MissingLabelNamesLine) {
  const auto path = write_temp("pa_bad.jsonl", "{\"text\": \"a\", \"label\": \"x\"}\n{\"text\": \"b\"}\n");
  try {
    load_dataset(path);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("label"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, MalformedJsonAndEmptyFileFail) {
  EXPECT_THROW(load_dataset(write_temp("pa_mal.jsonl", "{\"text\": \n")), std::runtime_error);
  EXPECT_THROW(load_dataset(write_temp("pa_empty.jsonl", "")), std::runtime_error);
  EXPECT_THROW(load_dataset("/nonexistent/pa.jsonl"), std::runtime_error);
}

TEST(LoadDataset, SyntheticCorpusHasTwentyClasses) {
  const auto path = (std::filesystem::temp_directory_path() / "pa_synth20.jsonl").string();
  SynthSpec spec;
  write_synthetic_dataset(spec, path);
  const Dataset d = load_dataset(path);
  EXPECT_EQ(d.classes().size(), 20u);
  EXPECT_EQ(d.size(), 600u);
}

TEST(SplitClasses, SizesFollowRatios) {
  const Dataset d = make_dataset(10, 3);
  const ClassSplit s = split_classes(d, {0.5, 0.2, 0.3}, 1, false);
  EXPECT_EQ(s.train_classes.size(), 5u);
  EXPECT_EQ(s.valid_classes.size(), 2u);
  EXPECT_EQ(s.test_classes.size(), 3u);
  std::set<std::string> all;
  for (auto p : {SplitPart::kTrain, SplitPart::kValid, SplitPart::kTest}) all.insert(s.part(p).begin(), s.part(p).end());
  EXPECT_EQ(all.size(), 10u);
}

TEST(SplitClasses, DeterministicPerSeed) {
  const Dataset d = make_dataset(20, 2);
  const ClassSplit a = split_classes(d, {}, 42, false);
  const ClassSplit b = split_classes(d, {}, 42, false);
  EXPECT_EQ(a.train_classes, b.train_classes);
  EXPECT_EQ(a.valid_classes, b.valid_classes);
  EXPECT_EQ(a.test_classes, b.test_classes);
}

TEST(SplitClasses, TooFewClassesThrows) {
  EXPECT_THROW(split_classes(make_dataset(2, 2), {}, 0, false), std::invalid_argument);
}

TEST(SplitClasses, DomainsNeverStraddleParts) {
  // Exhaustive over seeds: every domain lands wholly in one part.
  std::map<std::string, std::string> domains{{"c0", "A"}, {"c1", "A"}, {"c2", "A"}, {"c3", "B"}, {"c4", "B"},
                                             {"c5", "C"}, {"c6", "D"}, {"c7", "D"}};
  const Dataset d = make_dataset(8, 2, domains);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ClassSplit s = split_classes(d, {}, seed, true);
    std::map<std::string, std::set<int>> parts_of;
    int idx = 0;
    for (auto p : {SplitPart::kTrain, SplitPart::kValid, SplitPart::kTest}) {
      EXPECT_FALSE(s.part(p).empty());
      for (const auto& c : s.part(p)) parts_of[domains.at(c)].insert(idx);
      ++idx;
    }
    for (const auto& [dom, parts] : parts_of) EXPECT_EQ(parts.size(), 1u) << dom << " seed " << seed;
  }
}

TEST(SplitClasses, TwoDomainsCannotFillThreeParts) {
  std::map<std::string, std::string> domains{{"c0", "A"}, {"c1", "A"}, {"c2", "A"}, {"c3", "B"}, {"c4", "B"}};
  EXPECT_THROW(split_classes(make_dataset(5, 2, domains), {}, 0, true), std::invalid_argument);
}

TEST(RestrictLowProfile, CapsOnlyTrainingClasses) {
  std::vector<Record> records;
  auto add = [&](const std::string& label, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string text = label + " " + std::to_string(i);
      records.push_back({text, label, tokenize(text)});
    }
  };
  add("big", 170);
  add("small", 7);
  add("valid", 40);
  add("test", 40);
  const Dataset d(std::move(records), {});
  ClassSplit split;
  split.train_classes = {"big", "small"};
  split.valid_classes = {"valid"};
  split.test_classes = {"test"};
  const Dataset low = restrict_low_profile(d, split, 10, 5);
  EXPECT_EQ(low.records_of("big").size(), 10u);
  EXPECT_EQ(low.records_of("small").size(), 7u);
  EXPECT_EQ(low.records_of("valid").size(), 40u);
  EXPECT_EQ(low.records_of("test").size(), 40u);
  const Dataset again = restrict_low_profile(d, split, 10, 5);
  ASSERT_EQ(again.size(), low.size());
  for (std::size_t i = 0; i < low.size(); ++i) EXPECT_EQ(again.records()[i].text, low.records()[i].text);
}

TEST(SampleEpisode, CountsAndDisjointness) {
  const Dataset d = make_dataset(12, 20);
  const ClassSplit split = split_classes(d, {0.5, 0.25, 0.25}, 3, false);
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Episode ep = sample_episode(d, split, SplitPart::kTrain, {5, 1, 5, 5}, rng);
    ASSERT_EQ(ep.classes.size(), 5u);
    EXPECT_EQ(ep.support.size(), 5u);
    EXPECT_EQ(ep.query.size(), 25u);
    EXPECT_EQ(ep.unlabeled.size(), 5u);
    std::set<std::string> support_texts;
    for (const auto& s : ep.support) {
      support_texts.insert(s.text);
      EXPECT_LT(s.label, 5u);
    }
    for (const auto& q : ep.query) {
      EXPECT_EQ(support_texts.count(q.text), 0u);
      EXPECT_LT(q.label, 5u);
    }
    for (const auto& c : ep.classes) {
      EXPECT_NE(std::find(split.train_classes.begin(), split.train_classes.end(), c), split.train_classes.end());
    }
    EXPECT_EQ(std::set<std::string>(ep.unlabeled.begin(), ep.unlabeled.end()).size(), 5u);
  }
}

TEST(SampleEpisode, ThreeWayTwoShot) {
  const Dataset d = make_dataset(9, 10);
  const ClassSplit split = split_classes(d, {}, 0, false);
  Rng rng(5);
  const Episode ep = sample_episode(d, split, SplitPart::kTrain, {3, 2, 5, 0}, rng);
  std::vector<int> per_class(3, 0);
  for (const auto& s : ep.support) ++per_class[s.label];
  EXPECT_EQ(per_class, (std::vector<int>{2, 2, 2}));
}

TEST(SampleEpisode, EveryClassAppearsOverManyEpisodes) {
  const Dataset d = make_dataset(20, 10);
  const ClassSplit split = split_classes(d, {}, 1, false);
  Rng rng(6);
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) {
    const Episode ep = sample_episode(d, split, SplitPart::kTrain, {5, 1, 5, 0}, rng);
    seen.insert(ep.classes.begin(), ep.classes.end());
  }
  EXPECT_EQ(seen, std::set<std::string>(split.train_classes.begin(), split.train_classes.end()));
}

TEST(SampleEpisode, InsufficientRecordsNamesClass) {
  const Dataset d = make_dataset(6, 3);
  const ClassSplit split = split_classes(d, {0.34, 0.33, 0.33}, 0, false);
  Rng rng(7);
  try {
    sample_episode(d, split, SplitPart::kTrain, {2, 2, 2, 0}, rng);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("class 'c"), std::string::npos) << e.what();
  }
  EXPECT_THROW(sample_episode(d, split, SplitPart::kTrain, {5, 1, 1, 0}, rng), std::invalid_argument);
}

TEST(SampleEpisode, UnlabeledMayComeFromAnyClass) {
  const Dataset d = make_dataset(10, 5);
  const ClassSplit split = split_classes(d, {}, 2, false);
  Rng rng(8);
  std::set<std::string> labels;
  for (int i = 0; i < 300; ++i) {
    const Episode ep = sample_episode(d, split, SplitPart::kTrain, {2, 1, 1, 5}, rng);
    for (const auto& u : ep.unlabeled) labels.insert(tokenize(u)[0]);
  }
  EXPECT_EQ(labels.size(), 10u);
}

TEST(SampleEpisode, SeedDeterminism) {
  const Dataset d = make_dataset(10, 8);
  const ClassSplit split = split_classes(d, {}, 2, false);
  Rng a(99), b(99);
  for (int i = 0; i < 20; ++i) {
    const Episode x = sample_episode(d, split, SplitPart::kTrain, {3, 1, 2, 3}, a);
    const Episode y = sample_episode(d, split, SplitPart::kTrain, {3, 1, 2, 3}, b);
    EXPECT_EQ(x.classes, y.classes);
    EXPECT_EQ(x.unlabeled, y.unlabeled);
    ASSERT_EQ(x.query.size(), y.query.size());
    for (std::size_t j = 0; j < x.query.size(); ++j) EXPECT_EQ(x.query[j].text, y.query[j].text);
  }
}

}  // namespace
}  // namespace protaugment
