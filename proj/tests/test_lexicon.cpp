#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "ipaths/lexicon.hpp"

using namespace ipaths;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("default lexicon has the expected shape") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  CHECK(lex.size() == 3 + 2 + 40 + 40 + 8 + 8 + 12);
  CHECK(lex.size() <= 128);
  CHECK(lex.determiners.size() == 2);
  CHECK(lex.noun_pairs.size() == 20);
  CHECK(lex.verb_pairs.size() == 20);
  CHECK(lex.prepositions.size() == 8);
  CHECK(lex.adverbs.size() == 8);
  CHECK(lex.fillers.size() == 12);
}

TEST_CASE("word classes partition the vocabulary") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  int counts[7] = {0, 0, 0, 0, 0, 0, 0};
  for (TokenId id = 0; id < lex.size(); ++id)
    ++counts[static_cast<int>(lex.word_class(id))];
  CHECK(counts[static_cast<int>(WordClass::Special)] == 3);
  CHECK(counts[static_cast<int>(WordClass::Determiner)] == 2);
  CHECK(counts[static_cast<int>(WordClass::Noun)] == 40);
  CHECK(counts[static_cast<int>(WordClass::Verb)] == 40);
  CHECK(counts[static_cast<int>(WordClass::Preposition)] == 8);
  CHECK(counts[static_cast<int>(WordClass::Adverb)] == 8);
  CHECK(counts[static_cast<int>(WordClass::Filler)] == 12);

  // id() is a bijection over the stored surface forms.
  for (TokenId id = 0; id < lex.size(); ++id) CHECK(lex.id(lex.token(id)) == id);
  CHECK(lex.id("no-such-token") == lex.unk);
}

TEST_CASE("number swap is an involution pairing the numbered classes") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  for (TokenId id = 0; id < lex.size(); ++id) {
    const TokenId other = lex.number_swap(id);
    CHECK(lex.number_swap(other) == id);
    const WordClass cls = lex.word_class(id);
    if (cls == WordClass::Noun || cls == WordClass::Verb) {
      CHECK(other != id);
      CHECK(lex.word_class(other) == cls);
    } else {
      CHECK(other == id);
    }
  }
  for (auto [sing, plur] : lex.noun_pairs) {
    CHECK(lex.number_swap(sing) == plur);
    CHECK(lex.token(plur) == lex.token(sing) + "s");
  }
  for (auto [sing, plur] : lex.verb_pairs) {
    CHECK(lex.number_swap(sing) == plur);
    CHECK(lex.token(sing) == lex.token(plur) + "s");
  }
}

TEST_CASE("lexicon generation is deterministic in the seed") {
  const Lexicon a = build_lexicon(LexiconConfig{}, 11);
  const Lexicon b = build_lexicon(LexiconConfig{}, 11);
  const Lexicon c = build_lexicon(LexiconConfig{}, 12);
  REQUIRE(a.size() == b.size());
  for (TokenId id = 0; id < a.size(); ++id) CHECK(a.token(id) == b.token(id));
  bool any_diff = false;
  for (TokenId id = 0; id < a.size() && !any_diff; ++id)
    any_diff = a.token(id) != c.token(id);
  CHECK(any_diff);
}

TEST_CASE("lexicon file round trip preserves ids, classes, and pairs") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  const std::string path = temp_path("ipaths_lexicon_rt.json");
  save_lexicon(lex, path, FileMeta{});
  const Lexicon back = load_lexicon(path);
  std::remove(path.c_str());

  REQUIRE(back.size() == lex.size());
  for (TokenId id = 0; id < lex.size(); ++id) {
    CHECK(back.token(id) == lex.token(id));
    CHECK(back.word_class(id) == lex.word_class(id));
    CHECK(back.number_swap(id) == lex.number_swap(id));
  }
  CHECK(back.bos == lex.bos);
  CHECK(back.eos == lex.eos);
  CHECK(back.unk == lex.unk);
  CHECK(back.noun_pairs == lex.noun_pairs);
  CHECK(back.verb_pairs == lex.verb_pairs);
  CHECK(back.determiners == lex.determiners);
  CHECK(back.prepositions == lex.prepositions);
  CHECK(back.adverbs == lex.adverbs);
  CHECK(back.fillers == lex.fillers);
}

TEST_CASE("degenerate category sizes are rejected") {
  LexiconConfig cfg;
  cfg.noun_pairs = 1;  // task templates need two distinct noun lemmas
  CHECK_THROWS_AS(build_lexicon(cfg, 1), std::invalid_argument);
  cfg = LexiconConfig{};
  cfg.verb_pairs = 0;
  CHECK_THROWS_AS(build_lexicon(cfg, 1), std::invalid_argument);
}
