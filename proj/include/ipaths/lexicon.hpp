#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ipaths/types.hpp"

namespace ipaths {

enum class WordClass : std::uint8_t {
  Special,
  Determiner,
  Noun,
  Verb,
  Preposition,
  Adverb,
  Filler,
};

struct LexiconConfig {
  int determiners = 2;
  int noun_pairs = 20;
  int verb_pairs = 20;
  int prepositions = 8;
  int adverbs = 8;
  int fillers = 12;
};

// Closed synthetic vocabulary. Nouns and verbs come in singular/plural pairs;
// number_swap is a total involution on them. Ids are dense in [0, size()).
class Lexicon {
 public:
  TokenId bos = 0;
  TokenId eos = 0;
  TokenId unk = 0;

  std::vector<TokenId> determiners;
  std::vector<std::pair<TokenId, TokenId>> noun_pairs;  // (singular, plural)
  std::vector<std::pair<TokenId, TokenId>> verb_pairs;  // (singular, plural)
  std::vector<TokenId> prepositions;
  std::vector<TokenId> adverbs;
  std::vector<TokenId> fillers;

  int size() const { return static_cast<int>(vocab_.size()); }
  const std::string& token(TokenId id) const { return vocab_[static_cast<size_t>(id)]; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  TokenId id(std::string_view tok) const;
  WordClass word_class(TokenId id) const { return class_[static_cast<size_t>(id)]; }

  // Identity for tokens without grammatical number.
  TokenId number_swap(TokenId id) const { return swap_[static_cast<size_t>(id)]; }

  TokenId add(std::string tok, WordClass cls);
  void set_swap(TokenId a, TokenId b);

 private:
  std::vector<std::string> vocab_;
  std::vector<WordClass> class_;
  std::vector<TokenId> swap_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Deterministic in (config, seed). Throws std::invalid_argument on a
// zero-sized category.
Lexicon build_lexicon(const LexiconConfig& config, std::uint64_t seed);

void save_lexicon(const Lexicon& lex, const std::string& path, const FileMeta& meta);
Lexicon load_lexicon(const std::string& path);

}  // namespace ipaths
