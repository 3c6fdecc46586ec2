#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "ipaths/corpus.hpp"
#include "json.hpp"

using namespace ipaths;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Number number_of(const Lexicon& lex, TokenId noun) {
  for (auto [sing, plur] : lex.noun_pairs) {
    if (noun == sing) return Number::Singular;
    if (noun == plur) return Number::Plural;
  }
  for (auto [sing, plur] : lex.verb_pairs) {
    if (noun == sing) return Number::Singular;
    if (noun == plur) return Number::Plural;
  }
  FAIL("token has no grammatical number");
  return Number::Singular;
}

size_t pair_of(const Lexicon& lex, TokenId noun) {
  for (size_t i = 0; i < lex.noun_pairs.size(); ++i)
    if (noun == lex.noun_pairs[i].first || noun == lex.noun_pairs[i].second) return i;
  FAIL("not a noun");
  return 0;
}

}  // namespace

TEST_CASE("templates pin the verb distances") {
  CHECK(template_length(TaskKind::Simple) == 3);
  CHECK(template_length(TaskKind::NounPP) == 6);
  CHECK(template_length(TaskKind::NounPPAdv) == 7);
  CHECK(template_t_verb(TaskKind::Simple) - template_t_sub(TaskKind::Simple) == 1);
  CHECK(template_t_verb(TaskKind::NounPP) - template_t_sub(TaskKind::NounPP) == 4);
  CHECK(template_t_verb(TaskKind::NounPPAdv) - template_t_sub(TaskKind::NounPPAdv) == 5);
  CHECK(template_t_int(TaskKind::Simple) == -1);
  CHECK(template_t_int(TaskKind::NounPP) == 4);
  CHECK(template_t_int(TaskKind::NounPPAdv) == 4);
}

TEST_CASE("task instances realize their condition") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  for (TaskKind task : {TaskKind::Simple, TaskKind::NounPP, TaskKind::NounPPAdv}) {
    for (Condition cond : conditions_for(task)) {
      const auto data = generate_task_dataset(lex, task, cond, 50, 5);
      REQUIRE(data.size() == 50);
      for (const TaskInstance& inst : data) {
        REQUIRE(static_cast<int>(inst.tokens.size()) == template_length(task));
        CHECK(inst.t_sub == template_t_sub(task));
        CHECK(inst.t_verb == template_t_verb(task));
        CHECK(inst.task == task);
        CHECK(inst.condition == cond);

        CHECK(lex.word_class(inst.tokens[0]) == WordClass::Determiner);
        const TokenId subj = inst.tokens[static_cast<size_t>(inst.t_sub)];
        CHECK(lex.word_class(subj) == WordClass::Noun);
        CHECK(number_of(lex, subj) == subject_number(cond));

        const TokenId verb = inst.tokens[static_cast<size_t>(inst.t_verb)];
        CHECK(lex.word_class(verb) == WordClass::Verb);
        CHECK(number_of(lex, verb) == subject_number(cond));
        CHECK(inst.verb_correct == verb);
        CHECK(inst.verb_wrong == lex.number_swap(verb));

        if (task == TaskKind::Simple) {
          CHECK(!inst.t_int.has_value());
        } else {
          REQUIRE(inst.t_int.has_value());
          CHECK(*inst.t_int == template_t_int(task));
          CHECK(inst.t_sub < *inst.t_int);
          CHECK(*inst.t_int < inst.t_verb);
          const TokenId inter = inst.tokens[static_cast<size_t>(*inst.t_int)];
          CHECK(lex.word_class(inter) == WordClass::Noun);
          CHECK(number_of(lex, inter) == *intervening_number(cond));
          CHECK(pair_of(lex, inter) != pair_of(lex, subj));
          CHECK(lex.word_class(inst.tokens[2]) == WordClass::Preposition);
          CHECK(lex.word_class(inst.tokens[3]) == WordClass::Determiner);
        }
        if (task == TaskKind::NounPPAdv)
          CHECK(lex.word_class(inst.tokens[5]) == WordClass::Adverb);
      }
    }
  }
  CHECK_THROWS_AS(generate_task_dataset(lex, TaskKind::Simple, Condition::SS, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_task_dataset(lex, TaskKind::NounPP, Condition::S, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("task dataset files use the fixed record schema") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  const auto data = generate_task_dataset(lex, TaskKind::NounPP, Condition::SP, 7, 5);
  const auto simple = generate_task_dataset(lex, TaskKind::Simple, Condition::P, 3, 5);

  const std::string path = temp_path("ipaths_tasks_rt.json");
  save_task_dataset(path, data);

  // The on-disk form is a bare JSON array with exactly these keys.
  {
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 7);
    const std::set<std::string> expect = {"tokens", "t_sub", "t_int",   "t_verb",
                                          "condition", "verb_correct", "verb_wrong",
                                          "task"};
    std::set<std::string> got;
    for (auto& [key, value] : j[0].items()) got.insert(key);
    CHECK(got == expect);
    CHECK(j[0]["task"] == "nounPP");
    CHECK(j[0]["condition"] == "SP");
    CHECK(j[0]["tokens"][0].is_number_integer());
  }

  auto back = load_task_dataset(path);
  REQUIRE(back.size() == data.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].tokens == data[i].tokens);
    CHECK(back[i].t_sub == data[i].t_sub);
    CHECK(back[i].t_int == data[i].t_int);
    CHECK(back[i].t_verb == data[i].t_verb);
    CHECK(back[i].condition == data[i].condition);
    CHECK(back[i].verb_correct == data[i].verb_correct);
    CHECK(back[i].verb_wrong == data[i].verb_wrong);
    CHECK(back[i].task == data[i].task);
  }

  // A template without an intervening noun serializes t_int as null.
  save_task_dataset(path, simple);
  {
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    CHECK(j[0]["t_int"].is_null());
    CHECK(j[0]["task"] == "Simple");
  }
  std::remove(path.c_str());
}

TEST_CASE("training corpus mixes templates and keeps agreement") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  const auto corpus = generate_training_corpus(lex, 2000, 3);
  REQUIRE(corpus.size() == 2000);

  int with_filler = 0;
  std::set<size_t> lengths;
  for (const auto& sent : corpus) {
    // Strip the optional filler tail, then the rest must be one template.
    size_t core = sent.size();
    while (core > 0 && lex.word_class(sent[core - 1]) == WordClass::Filler) --core;
    if (core != sent.size()) ++with_filler;
    lengths.insert(core);

    TaskKind task;
    if (core == 3) task = TaskKind::Simple;
    else if (core == 6) task = TaskKind::NounPP;
    else if (core == 7) task = TaskKind::NounPPAdv;
    else { FAIL("unexpected core length ", core); continue; }

    const TokenId subj = sent[static_cast<size_t>(template_t_sub(task))];
    const TokenId verb = sent[static_cast<size_t>(template_t_verb(task))];
    CHECK(lex.word_class(subj) == WordClass::Noun);
    CHECK(lex.word_class(verb) == WordClass::Verb);
    CHECK(number_of(lex, subj) == number_of(lex, verb));
  }
  CHECK(lengths == std::set<size_t>{3, 6, 7});
  CHECK(with_filler > 200);
  CHECK(with_filler < 1000);

  // Deterministic regeneration, sensitive to the seed.
  CHECK(generate_training_corpus(lex, 2000, 3) == corpus);
  CHECK(generate_training_corpus(lex, 2000, 4) != corpus);
}

TEST_CASE("corpus text files round trip through the lexicon") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  const auto corpus = generate_training_corpus(lex, 200, 3);
  const std::string path = temp_path("ipaths_corpus_rt.txt");
  write_corpus(path, lex, corpus);

  // Plain text, one sentence per line.
  {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first.find(' ') != std::string::npos);
    CHECK(first.find('{') == std::string::npos);
  }
  CHECK(read_corpus(path, lex) == corpus);
  std::remove(path.c_str());

  const Lexicon other = build_lexicon(LexiconConfig{}, 99);
  CHECK_THROWS(read_corpus(path + "missing", lex));
}
