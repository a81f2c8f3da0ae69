#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "protaugment/decoding.hpp"
#include "protaugment/episodes.hpp"

namespace protaugment {

// A concept and its interchangeable surface forms; the first form names it.
struct Concept {
  std::string name;
  std::vector<std::string> forms;
};

struct Lexicon {
  std::vector<Concept> actions;
  std::vector<Concept> objects;
  std::vector<Concept> fillers;
  std::vector<std::string> templates;  // "{A}" and "{O}" mark the slots
  std::vector<std::string> openers;
  std::vector<std::string> closers;
};

const Lexicon& builtin_lexicon();

// Every surface form mapped to the other forms of its concept, plus a few
// everyday words.
SynonymTable builtin_synonyms();

struct SynthSpec {
  std::size_t n_classes = 20;
  std::size_t sentences_per_class = 30;
  std::uint64_t seed = 0;
  double opener_rate = 0.3;
  double closer_rate = 0.3;
};

// Intent classes are (action, object) pairs, so classes share vocabulary with
// each other while remaining separable by the pair. The object is the domain.
std::vector<Record> generate_synthetic_records(const SynthSpec& spec, std::map<std::string, std::string>* domains);

void write_synthetic_dataset(const SynthSpec& spec, const std::string& path);

void write_synonym_table(const SynonymTable& table, const std::string& path);
SynonymTable load_synonym_table(const std::string& path);

}  // namespace protaugment
