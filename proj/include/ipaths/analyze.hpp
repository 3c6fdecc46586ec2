#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipaths/influence.hpp"
#include "ipaths/lexicon.hpp"
#include "ipaths/metrics.hpp"
#include "ipaths/model.hpp"
#include "ipaths/report.hpp"
#include "ipaths/types.hpp"

namespace ipaths {

struct AnalyzeOptions {
  Focus focus = Focus::Subject;
  int k_steps = 50;
  int max_sentences = 0;  // 0 = whole dataset
  std::int64_t mc_samples = 100'000;
  std::uint64_t metrics_seed = 13;
  int threads = 1;
};

struct ConditionAnalysis {
  MetricReport report;
  std::vector<PerSentenceRow> sentences;
  // Mean attribution per path over the analyzed sentences, canonical
  // enumeration order. Feeds the top-paths chart.
  std::vector<double> mean_attribution;
  std::vector<int> path_lengths;
};

// Full decomposition for one (task, condition, focus) cell: per-sentence
// path attributions, summary metrics, and the neuron-level drill-down of
// the top path. If dump_jsonl is non-empty, writes one record per
// (sentence, path) while the table is in memory.
ConditionAnalysis analyze_condition(const LstmModel& m, const Lexicon& lex,
                                    TaskKind task, Condition cond,
                                    const std::vector<TaskInstance>& data,
                                    const AnalyzeOptions& opts,
                                    const std::string& dump_jsonl = "");

// Runs every requested (task, condition, focus) cell and writes summary.csv,
// per-sentence CSVs, charts, and report.md under out_dir. Returns the
// collected summaries in input order.
struct AnalyzeInput {
  TaskKind task = TaskKind::Simple;
  Condition condition = Condition::S;
  Focus focus = Focus::Subject;
  std::vector<TaskInstance> data;
};

std::vector<MetricReport> analyze_to_dir(const LstmModel& m,
                                         const Lexicon& lex,
                                         const std::vector<AnalyzeInput>& datasets,
                                         const AnalyzeOptions& opts,
                                         const FileMeta& meta,
                                         const std::string& out_dir,
                                         bool dump_attributions = false);

}  // namespace ipaths
