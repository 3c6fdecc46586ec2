#include "ipaths/lexicon.hpp"

#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace ipaths {

TokenId Lexicon::id(std::string_view tok) const {
  auto it = ids_.find(std::string(tok));
  if (it == ids_.end()) return unk;
  return it->second;
}

TokenId Lexicon::add(std::string tok, WordClass cls) {
  if (ids_.count(tok)) throw std::invalid_argument("duplicate token: " + tok);
  const TokenId id = static_cast<TokenId>(vocab_.size());
  ids_.emplace(tok, id);
  vocab_.push_back(std::move(tok));
  class_.push_back(cls);
  swap_.push_back(id);  // self until paired
  return id;
}

void Lexicon::set_swap(TokenId a, TokenId b) {
  swap_[static_cast<size_t>(a)] = b;
  swap_[static_cast<size_t>(b)] = a;
}

namespace {

// Pronounceable CV(C)V bases keep generated files readable in a pager.
std::string make_base(std::mt19937_64& rng, int syllables) {
  static const char* kCons = "bdfgklmnprstvz";
  static const char* kVow = "aeiou";
  std::uniform_int_distribution<int> cons(0, 13);
  std::uniform_int_distribution<int> vow(0, 4);
  std::string out;
  for (int s = 0; s < syllables; ++s) {
    out.push_back(kCons[cons(rng)]);
    out.push_back(kVow[vow(rng)]);
  }
  return out;
}

// Reserves both the base and its s-form so no category can collide with
// another category's inflected surface string.
std::string fresh_base(std::mt19937_64& rng, std::set<std::string>& used, int syllables) {
  for (int attempt = 0; attempt < 10'000; ++attempt) {
    std::string base = make_base(rng, syllables);
    if (used.count(base) || used.count(base + "s")) continue;
    used.insert(base);
    used.insert(base + "s");
    return base;
  }
  throw std::runtime_error("word space exhausted");
}

}  // namespace

Lexicon build_lexicon(const LexiconConfig& config, std::uint64_t seed) {
  if (config.determiners < 1 || config.noun_pairs < 2 || config.verb_pairs < 1 ||
      config.prepositions < 1 || config.adverbs < 1 || config.fillers < 0) {
    throw std::invalid_argument("lexicon category too small");
  }
  std::mt19937_64 rng(seed);
  std::set<std::string> used;
  Lexicon lex;
  lex.bos = lex.add("<bos>", WordClass::Special);
  lex.eos = lex.add("<eos>", WordClass::Special);
  lex.unk = lex.add("<unk>", WordClass::Special);

  for (int i = 0; i < config.determiners; ++i)
    lex.determiners.push_back(lex.add(fresh_base(rng, used, 2), WordClass::Determiner));

  // Nouns pluralize with -s; verbs use the bare form for plural subjects and
  // the s-form for singular ones.
  for (int i = 0; i < config.noun_pairs; ++i) {
    const std::string base = fresh_base(rng, used, 2);
    const TokenId sing = lex.add(base, WordClass::Noun);
    const TokenId plur = lex.add(base + "s", WordClass::Noun);
    lex.set_swap(sing, plur);
    lex.noun_pairs.emplace_back(sing, plur);
  }
  for (int i = 0; i < config.verb_pairs; ++i) {
    const std::string base = fresh_base(rng, used, 2);
    const TokenId plur = lex.add(base, WordClass::Verb);
    const TokenId sing = lex.add(base + "s", WordClass::Verb);
    lex.set_swap(sing, plur);
    lex.verb_pairs.emplace_back(sing, plur);
  }
  for (int i = 0; i < config.prepositions; ++i)
    lex.prepositions.push_back(lex.add(fresh_base(rng, used, 2), WordClass::Preposition));
  for (int i = 0; i < config.adverbs; ++i)
    lex.adverbs.push_back(lex.add(fresh_base(rng, used, 3), WordClass::Adverb));
  for (int i = 0; i < config.fillers; ++i)
    lex.fillers.push_back(lex.add(fresh_base(rng, used, 3), WordClass::Filler));
  return lex;
}

namespace {

nlohmann::json pair_list(const Lexicon& lex,
                         const std::vector<std::pair<TokenId, TokenId>>& pairs) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto [s, p] : pairs) arr.push_back({lex.token(s), lex.token(p)});
  return arr;
}

nlohmann::json token_list(const Lexicon& lex, const std::vector<TokenId>& ids) {
  nlohmann::json arr = nlohmann::json::array();
  for (TokenId id : ids) arr.push_back(lex.token(id));
  return arr;
}

}  // namespace

void save_lexicon(const Lexicon& lex, const std::string& path, const FileMeta& meta) {
  nlohmann::json j;
  j["format"] = "ipaths-lexicon-1";
  j["tool_version"] = meta.tool_version;
  j["config_hash"] = meta.config_hash;
  j["special"] = {{"bos", lex.token(lex.bos)},
                  {"eos", lex.token(lex.eos)},
                  {"unk", lex.token(lex.unk)}};
  j["determiners"] = token_list(lex, lex.determiners);
  j["noun_pairs"] = pair_list(lex, lex.noun_pairs);
  j["verb_pairs"] = pair_list(lex, lex.verb_pairs);
  j["prepositions"] = token_list(lex, lex.prepositions);
  j["adverbs"] = token_list(lex, lex.adverbs);
  j["fillers"] = token_list(lex, lex.fillers);
  nlohmann::json vocab = nlohmann::json::object();
  for (TokenId id = 0; id < lex.size(); ++id) vocab[lex.token(id)] = id;
  j["vocab"] = vocab;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "ipaths-lexicon-1")
    throw std::runtime_error("not a lexicon file: " + path);

  // Rebuild in stored vocab order so ids survive the round trip exactly.
  std::vector<std::string> by_id;
  for (auto& [tok, id] : j.at("vocab").items()) {
    const size_t i = id.get<size_t>();
    if (by_id.size() <= i) by_id.resize(i + 1);
    by_id[i] = tok;
  }

  auto class_of = [&](const std::string& tok) {
    if (tok == j["special"]["bos"] || tok == j["special"]["eos"] ||
        tok == j["special"]["unk"])
      return WordClass::Special;
    for (auto& t : j["determiners"]) if (t == tok) return WordClass::Determiner;
    for (auto& p : j["noun_pairs"]) if (p[0] == tok || p[1] == tok) return WordClass::Noun;
    for (auto& p : j["verb_pairs"]) if (p[0] == tok || p[1] == tok) return WordClass::Verb;
    for (auto& t : j["prepositions"]) if (t == tok) return WordClass::Preposition;
    for (auto& t : j["adverbs"]) if (t == tok) return WordClass::Adverb;
    for (auto& t : j["fillers"]) if (t == tok) return WordClass::Filler;
    throw std::runtime_error("token in vocab but no category: " + tok);
  };

  Lexicon lex;
  for (const auto& tok : by_id) lex.add(tok, class_of(tok));
  lex.bos = lex.id(j["special"]["bos"].get<std::string>());
  lex.eos = lex.id(j["special"]["eos"].get<std::string>());
  lex.unk = lex.id(j["special"]["unk"].get<std::string>());
  for (auto& t : j["determiners"]) lex.determiners.push_back(lex.id(t.get<std::string>()));
  for (auto& p : j["noun_pairs"]) {
    const TokenId s = lex.id(p[0].get<std::string>());
    const TokenId pl = lex.id(p[1].get<std::string>());
    lex.set_swap(s, pl);
    lex.noun_pairs.emplace_back(s, pl);
  }
  for (auto& p : j["verb_pairs"]) {
    const TokenId s = lex.id(p[0].get<std::string>());
    const TokenId pl = lex.id(p[1].get<std::string>());
    lex.set_swap(s, pl);
    lex.verb_pairs.emplace_back(s, pl);
  }
  for (auto& t : j["prepositions"]) lex.prepositions.push_back(lex.id(t.get<std::string>()));
  for (auto& t : j["adverbs"]) lex.adverbs.push_back(lex.id(t.get<std::string>()));
  for (auto& t : j["fillers"]) lex.fillers.push_back(lex.id(t.get<std::string>()));
  return lex;
}

}  // namespace ipaths
