// Copyright 2026 The SepsLab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sepslab/dataset.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "sepslab/errors.h"

namespace sepslab {
namespace {

using nlohmann::json;

struct AttributeTemplate {
  const char* question;
  const char* answer;
  const char* paraphrase;
  std::vector<std::string> values;
};

// `{n}` is the entity name and `{v}` the attribute value.
const std::vector<AttributeTemplate>& Attributes() {
  static const auto* const kAttributes = new std::vector<AttributeTemplate>{
      {"Where was {n} born?",
       "{n} was born in {v}.",
       "The birthplace of {n} is {v}.",
       {"Lisbon", "Oslo", "Cairo", "Lima", "Dublin", "Kyoto", "Quito", "Tunis",
        "Riga", "Perth", "Accra", "Porto"}},
      {"In which year was {n} born?",
       "{n} was born in {v}.",
       "The birth year of {n} is {v}.",
       {"1951", "1956", "1960", "1963", "1967", "1970", "1974", "1978", "1981",
        "1985", "1989", "1992"}},
      {"What does {n} do for a living?",
       "{n} works as a {v}.",
       "By trade, {n} is a {v}.",
       {"novelist", "poet", "journalist", "critic", "translator", "editor",
        "playwright", "essayist", "biographer", "columnist"}},
      {"Which genre does {n} write?",
       "{n} writes {v} novels.",
       "The novels of {n} are {v} stories.",
       {"mystery", "fantasy", "romance", "horror", "thriller", "historical",
        "comic", "gothic", "western", "literary"}},
      {"Which award did {n} win?",
       "{n} won the {v} Prize.",
       "The prize given to {n} is the {v} Prize.",
       {"Amber", "Silver", "Falcon", "Harbor", "Lantern", "Cedar", "Beacon",
        "Meridian", "Quill", "Summit"}},
      {"What was the job of the father of {n}?",
       "The father of {n} was a {v}.",
       "{n} had a father who was a {v}.",
       {"baker", "doctor", "pilot", "farmer", "tailor", "sailor", "teacher",
        "miner", "painter", "chemist"}},
      {"What was the job of the mother of {n}?",
       "The mother of {n} was a {v}.",
       "{n} had a mother who was a {v}.",
       {"nurse", "lawyer", "architect", "librarian", "musician", "banker",
        "dentist", "florist", "engineer", "judge"}},
      {"In which language does {n} write?",
       "{n} writes in {v}.",
       "The writing language of {n} is {v}.",
       {"English", "Spanish", "French", "German", "Italian", "Polish", "Dutch",
        "Swedish", "Greek", "Turkish"}},
      {"What pet does {n} keep?",
       "{n} keeps a {v}.",
       "The pet of {n} is a {v}.",
       {"cat", "dog", "parrot", "rabbit", "tortoise", "ferret", "goldfish",
        "hamster", "lizard", "canary"}},
      {"What is the favorite color of {n}?",
       "The favorite color of {n} is {v}.",
       "{n} likes the color {v} most.",
       {"red", "blue", "green", "yellow", "purple", "orange", "gray", "teal",
        "crimson", "indigo"}},
      {"Which instrument does {n} play?",
       "{n} plays the {v}.",
       "The instrument of {n} is the {v}.",
       {"piano", "violin", "cello", "flute", "guitar", "harp", "trumpet",
        "drums", "clarinet", "oboe"}},
      {"Where did {n} study?",
       "{n} studied at {v} University.",
       "The university of {n} was {v} University.",
       {"Harlow", "Kingsley", "Marlow", "Ashford", "Brenton", "Colby",
        "Denholm", "Everly", "Fairview", "Glenwood"}},
      {"When did {n} publish a first book?",
       "{n} debuted in {v}.",
       "The debut of {n} came in {v}.",
       {"1979", "1983", "1987", "1990", "1994", "1998", "2001", "2005", "2009",
        "2013"}},
      {"How many books has {n} written?",
       "{n} has written {v} books.",
       "The number of books by {n} is {v}.",
       {"3", "4", "5", "6", "7", "8", "9", "11", "12", "15"}},
      {"What does {n} do for fun?",
       "{n} enjoys {v}.",
       "In spare time, {n} enjoys {v}.",
       {"chess", "sailing", "gardening", "painting", "hiking", "cooking",
        "fishing", "pottery", "archery", "knitting"}},
      {"Where does {n} live now?",
       "{n} lives in {v}.",
       "The current home of {n} is {v}.",
       {"Boston", "Madrid", "Vienna", "Prague", "Seoul", "Nairobi", "Denver",
        "Bergen", "Naples", "Hobart"}},
      {"Who publishes the books of {n}?",
       "{n} is published by {v} Press.",
       "The publisher of {n} is {v} Press.",
       {"Oakleaf", "Bluebird", "Ironwood", "Redstone", "Northgate", "Willow",
        "Granite", "Seabright", "Foxglove", "Pinecrest"}},
      {"What is the first book of {n} called?",
       "The first book of {n} is called {v}.",
       "{n} began with a book called {v}.",
       {"Embers", "Tidewater", "Nightfall", "Driftwood", "Stillness",
        "Undertow", "Wildfire", "Moonrise", "Crossings", "Hollow"}},
      {"What is the favorite food of {n}?",
       "The favorite food of {n} is {v}.",
       "{n} likes to eat {v} most.",
       {"pasta", "curry", "sushi", "soup", "dumplings", "tacos", "paella",
        "risotto", "stew", "salad"}},
      {"What theme appears in the work of {n}?",
       "The work of {n} explores {v}.",
       "The books of {n} are about {v}.",
       {"memory", "exile", "grief", "identity", "justice", "faith", "war",
        "love", "family", "freedom"}},
  };
  return *kAttributes;
}

// Pseudo-word author names built from two syllables and a coda.
constexpr std::string_view kOnsets[] = {"B", "D", "F", "G", "K", "L", "M",
                                        "N", "P", "R", "S", "T", "V", "Z"};
constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u"};
constexpr std::string_view kCodas[] = {"n", "r", "l", "s", "th"};
constexpr size_t kNumNames = std::size(kOnsets) * std::size(kVowels) *
                             std::size(kOnsets) * std::size(kVowels) *
                             std::size(kCodas);

std::string NameAt(size_t index) {
  std::string name;
  const size_t coda = index % std::size(kCodas);
  index /= std::size(kCodas);
  const size_t v2 = index % std::size(kVowels);
  index /= std::size(kVowels);
  const size_t o2 = index % std::size(kOnsets);
  index /= std::size(kOnsets);
  const size_t v1 = index % std::size(kVowels);
  const size_t o1 = index / std::size(kVowels);
  std::string second(kOnsets[o2]);
  second[0] = static_cast<char>(second[0] - 'A' + 'a');
  name.append(kOnsets[o1]).append(kVowels[v1]).append(second);
  name.append(kVowels[v2]).append(kCodas[coda]);
  return name;
}

std::string Fill(std::string_view pattern, const std::string& name,
                 const std::string& value) {
  std::string out;
  for (size_t i = 0; i < pattern.size(); ++i) {
    if (pattern.substr(i, 3) == "{n}") {
      out += name;
      i += 2;
    } else if (pattern.substr(i, 3) == "{v}") {
      out += value;
      i += 2;
    } else {
      out += pattern[i];
    }
  }
  return out;
}

json PairToJson(const QAPair& p) {
  json j = {{"id", p.id}, {"question", p.question}, {"answer", p.answer}};
  if (!p.paraphrased_answer.empty())
    j["paraphrased_answer"] = p.paraphrased_answer;
  if (!p.perturbed_answers.empty())
    j["perturbed_answers"] = p.perturbed_answers;
  return j;
}

std::string Serialize(const UnlearnSplit& split) {
  std::vector<std::string> forget_ids;
  for (const auto& p : split.forget) forget_ids.push_back(p.id);
  const size_t total = split.forget.size() + split.retain.size();
  json header = {
      {"forget_ids", forget_ids},
      {"idk_pool", split.idk_pool},
      {"seed", split.seed},
      {"forget_fraction",
       total == 0 ? 0.0 : static_cast<double>(split.forget.size()) / total},
      {"num_forget", split.forget.size()},
      {"num_retain", split.retain.size()}};
  std::string out = header.dump() + "\n";
  for (const auto& p : split.retain) out += PairToJson(p).dump() + "\n";
  for (const auto& p : split.forget) out += PairToJson(p).dump() + "\n";
  return out;
}

QAPair PairFromJson(const json& j, int line) {
  if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
  QAPair p;
  try {
    p.id = j.at("id").get<std::string>();
    p.question = j.at("question").get<std::string>();
    p.answer = j.at("answer").get<std::string>();
    if (j.contains("paraphrased_answer")) {
      p.paraphrased_answer = j["paraphrased_answer"].get<std::string>();
    }
    if (j.contains("perturbed_answers")) {
      p.perturbed_answers =
          j["perturbed_answers"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ParseError(line, std::string("bad QA record: ") + e.what());
  }
  return p;
}

}  // namespace

void QAPair::Validate() const {
  if (question.empty() || answer.empty()) {
    throw ValidationError("pair '" + id + "' has an empty question or answer");
  }
  std::set<std::string> seen;
  for (const auto& a : perturbed_answers) {
    if (!seen.insert(a).second) {
      throw ValidationError("pair '" + id + "' repeats a perturbed answer");
    }
    if (!paraphrased_answer.empty() && a == paraphrased_answer) {
      throw ValidationError("pair '" + id +
                            "' has a perturbed answer equal to its paraphrase");
    }
  }
}

void UnlearnSplit::Validate() const {
  std::unordered_set<std::string> ids;
  for (const auto* set : {&forget, &retain}) {
    for (const auto& p : *set) {
      p.Validate();
      if (!ids.insert(p.id).second) {
        throw ValidationError("duplicate id '" + p.id + "'");
      }
    }
  }
}

void UnlearnSplit::ValidateForUnlearning(bool targeted) const {
  Validate();
  if (forget.empty()) throw ValidationError("the forget set is empty");
  if (targeted && idk_pool.empty()) {
    throw ValidationError("targeted unlearning needs a non-empty refusal pool");
  }
}

std::string UnlearnSplit::Hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(Serialize(*this))));
  return buf;
}

std::vector<std::string> DefaultIdkPool() {
  return {"I'm not sure.", "I'm blank on that topic.",
          "That's not within my current dataset.",
          "That's something I've yet to learn."};
}

UnlearnSplit LoadSplit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  UnlearnSplit split;
  std::vector<std::string> forget_ids;
  std::vector<std::pair<QAPair, int>> records;
  std::string text;
  int line = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      have_header = true;
      try {
        forget_ids = j.at("forget_ids").get<std::vector<std::string>>();
        split.idk_pool = j.value("idk_pool", std::vector<std::string>{});
        split.seed = j.value("seed", uint64_t{0});
      } catch (const json::exception& e) {
        throw ParseError(line, std::string("bad split header: ") + e.what());
      }
      continue;
    }
    records.emplace_back(PairFromJson(j, line), line);
  }
  if (!have_header) throw ParseError(line, "missing split header");

  std::unordered_map<std::string, size_t> forget_rank;
  for (size_t i = 0; i < forget_ids.size(); ++i) {
    if (!forget_rank.emplace(forget_ids[i], i).second) {
      throw ValidationError("duplicate id '" + forget_ids[i] +
                            "' in forget_ids");
    }
  }
  std::unordered_set<std::string> seen;
  std::vector<QAPair> forget(forget_ids.size());
  size_t found = 0;
  for (auto& [pair, rec_line] : records) {
    if (!seen.insert(pair.id).second) {
      throw ValidationError("duplicate id '" + pair.id + "' on line " +
                            std::to_string(rec_line));
    }
    if (auto it = forget_rank.find(pair.id); it != forget_rank.end()) {
      forget[it->second] = std::move(pair);
      ++found;
    } else {
      split.retain.push_back(std::move(pair));
    }
  }
  if (found != forget_ids.size()) {
    throw ValidationError("forget_ids names records missing from the file");
  }
  split.forget = std::move(forget);
  split.Validate();
  return split;
}

void SaveSplit(const UnlearnSplit& split, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << Serialize(split);
    if (!out) throw IoError("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

int MaxQaPerEntity() { return static_cast<int>(Attributes().size()); }

UnlearnSplit SynthesizeCorpus(const CorpusSpec& spec) {
  const auto& attrs = Attributes();
  if (spec.num_entities < 1 || spec.qa_per_entity < 1) {
    throw ValidationError("corpus needs at least one entity and one pair");
  }
  if (spec.qa_per_entity > static_cast<int>(attrs.size())) {
    throw ValidationError("at most " + std::to_string(attrs.size()) +
                          " pairs per entity are supported");
  }
  if (static_cast<size_t>(spec.num_entities) > kNumNames / 2) {
    throw ValidationError("at most " + std::to_string(kNumNames / 2) +
                          " entities are supported");
  }
  if (spec.num_perturbed < 1) {
    throw ValidationError("at least one perturbed answer is required");
  }
  const int total = spec.num_entities * spec.qa_per_entity;
  const int num_forget =
      static_cast<int>(std::lround(spec.forget_fraction * total));
  if (num_forget <= 0) {
    throw ValidationError("forget fraction " +
                          std::to_string(spec.forget_fraction) + " of " +
                          std::to_string(total) + " pairs rounds to zero");
  }
  if (num_forget >= total)
    throw ValidationError("forget set leaves no retain pairs");

  // Distinct names by a seeded partial shuffle of the name space.
  Rng name_rng = SubStream(spec.seed, "corpus/names");
  std::vector<size_t> grid(kNumNames);
  for (size_t i = 0; i < grid.size(); ++i) grid[i] = i;
  for (size_t i = 0; i < static_cast<size_t>(spec.num_entities); ++i) {
    std::swap(grid[i], grid[i + UniformIndex(name_rng, grid.size() - i)]);
  }

  Rng value_rng = SubStream(spec.seed, "corpus/values");
  std::vector<QAPair> all;
  all.reserve(total);
  for (int e = 0; e < spec.num_entities; ++e) {
    const std::string name = NameAt(grid[e]);
    for (int k = 0; k < spec.qa_per_entity; ++k) {
      const auto& attr = attrs[k];
      if (static_cast<int>(attr.values.size()) <= spec.num_perturbed) {
        throw ValidationError("too many perturbed answers requested");
      }
      const size_t truth = UniformIndex(value_rng, attr.values.size());
      QAPair p;
      char id[32];
      std::snprintf(id, sizeof(id), "e%03d-q%02d", e, k);
      p.id = id;
      p.question = Fill(attr.question, name, "");
      p.answer = Fill(attr.answer, name, attr.values[truth]);
      p.paraphrased_answer = Fill(attr.paraphrase, name, attr.values[truth]);
      std::vector<size_t> others;
      for (size_t v = 0; v < attr.values.size(); ++v) {
        if (v != truth) others.push_back(v);
      }
      for (int i = 0; i < spec.num_perturbed; ++i) {
        std::swap(others[i],
                  others[i + UniformIndex(value_rng, others.size() - i)]);
        p.perturbed_answers.push_back(
            Fill(attr.paraphrase, name, attr.values[others[i]]));
      }
      all.push_back(std::move(p));
    }
  }

  UnlearnSplit split;
  split.seed = spec.seed;
  split.idk_pool = DefaultIdkPool();
  split.retain.assign(all.begin(), all.end() - num_forget);
  split.forget.assign(all.end() - num_forget, all.end());
  split.Validate();
  return split;
}

const std::string& SampleIdk(const UnlearnSplit& split, Rng& rng) {
  if (split.idk_pool.empty())
    throw ValidationError("the refusal pool is empty");
  return split.idk_pool[UniformIndex(rng, split.idk_pool.size())];
}

}  // namespace sepslab
