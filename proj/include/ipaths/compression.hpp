#pragma once

#include <Eigen/Dense>
#include <array>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ipaths/model.hpp"
#include "ipaths/types.hpp"

namespace ipaths {

// (gate, layer, trace time) of a preserved gate vector.
using GateSite = std::tuple<int, int, int>;

enum class SchemeKind : std::uint8_t {
  CbarSI,  // preserve everything in span except ccand at subject+intervening
  CbarS,
  CbarI,
  CSI,     // preserve only ccand at subject+intervening
  CS,
  CI,
  Uncompressed,
};

const char* scheme_name(SchemeKind k);
std::vector<SchemeKind> all_schemes();

struct CompressionScheme {
  std::string name;
  bool uncompressed = false;
  std::set<GateSite> preserved;
  int span_begin = 0;  // trace times [span_begin, span_end) are intervened
  int span_end = 0;
};

// Mean gate activations per (gate, layer, trace time) over clean forward
// passes of one template's dataset.
struct GateAverages {
  int length = 0;  // trace length T
  std::array<std::array<Eigen::MatrixXd, kNumGates>, 2> mean;  // [layer][gate]: H x T
};

// Throws std::invalid_argument when the instances mix templates.
GateAverages compute_gate_averages(const LstmModel& m, TokenId bos,
                                   std::span<const TaskInstance> data);

// Forward pass where non-preserved gates inside the span are replaced by
// their dataset means before c and h are formed; preserved gates are computed
// from the already-intervened upstream state; c and h are always recomputed.
ActivationTrace compressed_forward(const LstmModel& m, TokenId bos,
                                   const TaskInstance& inst,
                                   const CompressionScheme& scheme,
                                   const GateAverages& averages);

// Scheme for one task template. With strict_span the intervention covers only
// the trace times strictly between subject and read-off; by default it covers
// the whole prefix [0, read-off].
CompressionScheme make_scheme(SchemeKind kind, TaskKind task, bool strict_span = false);

double compressed_na_accuracy(const LstmModel& m, TokenId bos,
                              std::span<const TaskInstance> data,
                              const CompressionScheme& scheme,
                              const GateAverages& averages);

struct CompressionRow {
  TaskKind task = TaskKind::NounPP;
  Condition condition = Condition::SS;
  bool is_mean = false;
  std::array<double, 7> accuracy{};  // ordered as all_schemes()
};

struct CompressionOptions {
  bool strict_span = false;
  bool pool_per_task = false;  // pool averages across conditions of a task
  int threads = 1;
};

struct TaskDatasets {
  TaskKind task = TaskKind::NounPP;
  std::vector<std::pair<Condition, std::vector<TaskInstance>>> by_condition;
};

// One row per (task, condition) plus a mean row per task.
std::vector<CompressionRow> run_schemes(const LstmModel& m, TokenId bos,
                                        std::span<const TaskDatasets> datasets,
                                        const CompressionOptions& opts);

}  // namespace ipaths
