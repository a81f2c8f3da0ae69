#include "protaugment/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace protaugment {

const Lexicon& builtin_lexicon() {
  static const Lexicon lexicon{
      {
          {"check", {"check", "verify", "view", "inspect", "review"}},
          {"cancel", {"cancel", "stop", "terminate", "end", "halt"}},
          {"change", {"change", "update", "modify", "edit", "adjust"}},
          {"open", {"open", "create", "start", "begin", "launch"}},
          {"find", {"find", "locate", "track", "search", "trace"}},
          {"close", {"close", "shut", "lock", "freeze", "block"}},
          {"renew", {"renew", "extend", "refresh", "restore", "reactivate"}},
          {"share", {"share", "send", "forward", "transmit", "pass"}},
      },
      {
          {"card", {"card", "debit", "visa", "mastercard", "plastic"}},
          {"account", {"account", "profile", "membership", "login", "registration"}},
          {"transfer", {"transfer", "payment", "remittance", "wire", "deposit"}},
          {"alarm", {"alarm", "reminder", "alert", "timer", "notification"}},
          {"playlist", {"playlist", "song", "music", "album", "tune"}},
          {"order", {"order", "purchase", "delivery", "package", "shipment"}},
      },
      {
          {"please", {"please", "kindly"}},
          {"want", {"want", "wish", "hope"}},
          {"need", {"need", "have"}},
          {"help", {"help", "assist", "aid"}},
          {"today", {"today", "now", "tonight"}},
          {"can", {"can", "could", "would"}},
          {"like", {"like", "love"}},
          {"possible", {"possible", "doable", "feasible"}},
          {"my", {"my", "our"}},
      },
      {
          "can you {A} my {O}",
          "please {A} my {O}",
          "i want to {A} my {O}",
          "how do i {A} my {O}",
          "i need to {A} the {O}",
          "help me {A} my {O}",
          "is it possible to {A} my {O} today",
          "{A} my {O} please",
          "can you {A} the {O} for me",
          "i would like to {A} my {O}",
      },
      {"hi", "hello", "hey"},
      {"thanks", "thx", "cheers"},
  };
  return lexicon;
}

SynonymTable builtin_synonyms() {
  SynonymTable table;
  auto add_group = [&](const std::vector<std::string>& forms) {
    for (const auto& f : forms) {
      auto& list = table[f];
      for (const auto& g : forms) {
        if (g != f && std::find(list.begin(), list.end(), g) == list.end()) list.push_back(g);
      }
    }
  };
  const Lexicon& lex = builtin_lexicon();
  for (const auto* group : {&lex.actions, &lex.objects, &lex.fillers}) {
    for (const auto& c : *group) add_group(c.forms);
  }
  add_group(lex.openers);
  add_group(lex.closers);
  for (const std::vector<std::string>& forms : std::vector<std::vector<std::string>>{
           {"sure", "certain", "positive"},
           {"phone", "cellphone", "mobile"},
           {"know", "understand"},
           {"long", "lengthy"},
           {"pending", "waiting"},
           {"file", "document"},
           {"play", "run"},
       }) {
    add_group(forms);
  }
  return table;
}

std::vector<Record> generate_synthetic_records(const SynthSpec& spec,
                                               std::map<std::string, std::string>* domains) {
  const Lexicon& lex = builtin_lexicon();
  if (spec.n_classes < 2) throw std::invalid_argument("synthetic dataset needs at least 2 classes");
  if (spec.sentences_per_class == 0) throw std::invalid_argument("synthetic dataset needs sentences per class");
  const std::size_t max_classes = lex.actions.size() * lex.objects.size();
  if (spec.n_classes > max_classes) {
    throw std::invalid_argument("synthetic lexicon supports at most " + std::to_string(max_classes) + " classes");
  }
  // Near-square grid of actions x objects, filled row by row.
  std::size_t n_objects = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(spec.n_classes))));
  n_objects = std::min(n_objects, lex.objects.size());
  const std::size_t n_actions = (spec.n_classes + n_objects - 1) / n_objects;
  if (n_actions > lex.actions.size()) throw std::invalid_argument("synthetic lexicon has too few actions");

  std::map<std::string, const Concept*> filler_of;
  for (const auto& f : lex.fillers) filler_of[f.name] = &f;

  Rng rng(spec.seed);
  std::vector<Record> records;
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    const Concept& action = lex.actions[c / n_objects];
    const Concept& object = lex.objects[c % n_objects];
    const std::string label = action.name + "_" + object.name;
    if (domains != nullptr) (*domains)[label] = object.name;
    for (std::size_t i = 0; i < spec.sentences_per_class; ++i) {
      Tokens resolved;
      if (uniform01(rng) < spec.opener_rate) {
        resolved.push_back(lex.openers[uniform_index(rng, lex.openers.size())]);
      }
      const std::string& tmpl = lex.templates[uniform_index(rng, lex.templates.size())];
      std::istringstream words(tmpl);
      for (std::string word; words >> word;) {
        if (word == "{A}" || word == "{O}") {
          const Concept& slot = word == "{A}" ? action : object;
          resolved.push_back(slot.forms[uniform_index(rng, slot.forms.size())]);
        } else if (auto it = filler_of.find(word); it != filler_of.end()) {
          const auto& forms = it->second->forms;
          resolved.push_back(forms[uniform_index(rng, forms.size())]);
        } else {
          resolved.push_back(word);
        }
      }
      if (uniform01(rng) < spec.closer_rate) resolved.push_back(lex.closers[uniform_index(rng, lex.closers.size())]);
      Record rec{join_tokens(resolved), label, resolved};
      records.push_back(std::move(rec));
    }
  }
  return records;
}

void write_synthetic_dataset(const SynthSpec& spec, const std::string& path) {
  std::map<std::string, std::string> domains;
  const auto records = generate_synthetic_records(spec, &domains);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  for (const auto& r : records) {
    nlohmann::ordered_json line;
    line["text"] = r.text;
    line["label"] = r.label;
    line["domain"] = domains.at(r.label);
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing dataset: " + path);
}

void write_synonym_table(const SynonymTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write synonym table: " + path);
  out << nlohmann::json(table).dump(2) << '\n';
}

SynonymTable load_synonym_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open synonym table: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("synonym table " + path + ": " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("synonym table " + path + ": expected an object of string lists");
  SynonymTable table;
  for (const auto& [word, syns] : j.items()) {
    if (!syns.is_array()) throw std::runtime_error("synonym table " + path + ": entry '" + word + "' is not a list");
    for (const auto& s : syns) table[word].push_back(s.get<std::string>());
  }
  return table;
}

}  // namespace protaugment
