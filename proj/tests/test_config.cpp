#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "ipaths/config.hpp"

using namespace ipaths;

TEST_CASE("defaults survive a serialize/parse round trip") {
  RunConfig c;
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config_text(text);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("edited values survive the round trip losslessly") {
  RunConfig c;
  c.lexicon.noun_pairs = 7;
  c.lexicon_seed = 123456789012345ull;
  c.corpus_sentences = 1'000'000;
  c.train.learning_rate = 3e-4;
  c.train.simple_gate = 0.925;
  c.k_steps = 500;
  c.dump_attributions = true;
  c.strict_span = true;
  c.out_dir = "runs/exp 1";
  c.threads = 8;

  const RunConfig back = parse_config_text(serialize_config(c));
  CHECK(back.lexicon.noun_pairs == 7);
  CHECK(back.lexicon_seed == 123456789012345ull);
  CHECK(back.corpus_sentences == 1'000'000);
  CHECK(back.train.learning_rate == 3e-4);
  CHECK(back.train.simple_gate == 0.925);
  CHECK(back.k_steps == 500);
  CHECK(back.dump_attributions);
  CHECK(back.strict_span);
  CHECK(back.out_dir == "runs/exp 1");
  CHECK(back.threads == 8);
  CHECK(serialize_config(back) == serialize_config(c));
}

TEST_CASE("comments, blank lines, and whitespace are tolerated") {
  const std::string text =
      "# a comment\n"
      "\n"
      "[train]\n"
      "  epochs =  3 \n"
      "; another comment\n"
      "[run]\n"
      "threads=2\n";
  const RunConfig c = parse_config_text(text);
  CHECK(c.train.epochs == 3);
  CHECK(c.threads == 2);
  CHECK(c.train.batch_size == RunConfig{}.train.batch_size);
}

TEST_CASE("malformed input is rejected with a diagnostic") {
  CHECK_THROWS_WITH_AS(parse_config_text("[run]\nmystery = 1\n"),
                       doctest::Contains("unknown config key 'run.mystery'"),
                       std::runtime_error);
  CHECK_THROWS_AS(parse_config_text("[nope]\nx = 1\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config_text("[train]\nepochs = soon\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config_text("[train\nepochs = 1\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config_text("[train]\nepochs\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config_text("[analyze]\ndump_attributions = maybe\n"),
                  std::runtime_error);
  CHECK_THROWS_AS(parse_config_text("[train]\nseed = -4\n"), std::runtime_error);
}

TEST_CASE("config hash tracks content") {
  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.train.epochs += 1;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("fnv1a matches published test vectors") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("load_config reads a file") {
  const std::string path = "test_config_tmp.ini";
  {
    std::ofstream out(path);
    out << "[tasks]\ncount = 42\n";
  }
  const RunConfig c = load_config(path);
  std::remove(path.c_str());
  CHECK(c.task_count == 42);
  CHECK_THROWS_AS(load_config("does_not_exist.ini"), std::runtime_error);
}
