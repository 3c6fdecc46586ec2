#pragma once

#include <cstdint>
#include <string>

#include "ipaths/lexicon.hpp"
#include "ipaths/train.hpp"

namespace ipaths {

// Every stochastic stage carries its own seed; the resolved config
// round-trips losslessly through the INI-style text form.
struct RunConfig {
  LexiconConfig lexicon;
  std::uint64_t lexicon_seed = 11;

  std::int64_t corpus_sentences = 50'000;
  std::uint64_t corpus_seed = 3;

  int task_count = 300;
  std::uint64_t task_seed = 5;

  TrainParams train;

  int k_steps = 50;
  std::int64_t mc_samples = 100'000;
  std::uint64_t metrics_seed = 13;
  bool dump_attributions = false;
  int analyze_sentences = 0;  // 0 = whole dataset

  bool strict_span = false;
  bool pool_per_task = false;

  std::string out_dir = "out";
  int threads = 1;
};

std::string serialize_config(const RunConfig& c);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Single-key access in "section.key" form, e.g. "train.epochs". Values use
// the same textual representation as the file format. Throws on unknown
// keys or unparseable values.
void apply_config_kv(RunConfig& c, const std::string& key, const std::string& value);
std::string get_config_kv(const RunConfig& c, const std::string& key);

// FNV-1a over the canonical serialized form.
std::string config_hash(const RunConfig& c);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace ipaths
