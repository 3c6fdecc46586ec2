#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "ipaths/types.hpp"

namespace ipaths {

// Per-sentence per-path scalar attributions for one (task, condition, focus)
// run: rows[sentence][path].
struct AttributionTable {
  std::vector<std::vector<double>> rows;

  int num_sentences() const { return static_cast<int>(rows.size()); }
  int num_paths() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }
};

// Probability that the target path's attribution strictly exceeds that of a
// uniformly sampled other path on a uniformly sampled sentence. Ties count
// against the target; the target is excluded from the comparison pool.
double t_value_exact(const AttributionTable& table, int target);
double t_value_mc(const AttributionTable& table, int target, std::int64_t samples,
                  std::uint64_t seed);
// Exact when num_paths <= exact_threshold, Monte-Carlo otherwise.
double t_value(const AttributionTable& table, int target, std::int64_t samples,
               std::uint64_t seed, int exact_threshold = 10'000);

struct ShareResult {
  double share = 0.0;     // mean over usable sentences, in [0, 1]
  bool positive = true;   // sign tag of the target's mean attribution
  int skipped = 0;        // sentences whose relevant-sign total was zero
};

// Expected fraction of total same-sign attribution carried by the target.
ShareResult share(const AttributionTable& table, int target);

// t-values of every neuron path against the pool of other neuron paths minus
// `exclude` (the target itself is always excluded).
std::vector<double> neuron_t_values(const AttributionTable& table,
                                    const std::set<int>& exclude);

// Fraction of sentences with strictly positive total attribution.
double p_plus(const std::vector<double>& totals);

struct MetricReport {
  TaskKind task = TaskKind::Simple;
  Condition condition = Condition::S;
  Focus focus = Focus::Subject;
  double p_plus = 0.0;
  std::uint64_t num_paths = 0;
  double primary_share = 0.0;
  bool primary_share_positive = true;
  double primary_t = 0.0;
  int top_neuron_1 = -1;
  double top_t_1 = 0.0;
  int top_neuron_2 = -1;
  double top_t_2 = 0.0;
  int sentences = 0;
  int share_skipped = 0;
  std::uint64_t metrics_seed = 0;
  std::int64_t mc_samples = 0;
};

}  // namespace ipaths
