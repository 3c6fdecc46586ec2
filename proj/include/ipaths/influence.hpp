#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ipaths/graph.hpp"
#include "ipaths/lexicon.hpp"
#include "ipaths/model.hpp"

namespace ipaths {

// q = s(verb_correct) - s(verb_wrong) at the read-off logit row. Its exact
// gradient with respect to the final hidden state is the decoder row
// difference.
struct AgreementQoI {
  TokenId verb_correct = 0;
  TokenId verb_wrong = 0;
  int read_time = 0;  // trace time feeding the scored logits

  Eigen::RowVectorXd decoder_row(const LstmModel& m) const;
};

// Linear interpolation from the number-neutral embedding to the actual one
// at a single position; samples are the right endpoints j/k, j = 1..k.
struct DoiSpec {
  int t_focus = 0;  // trace time whose input embedding varies
  Eigen::VectorXd w_end;
  Eigen::VectorXd w_neutral;
  int k_steps = 50;

  Eigen::VectorXd displacement() const { return w_end - w_neutral; }
  Eigen::VectorXd point(int j) const;  // 1 <= j <= k_steps
};

// Everything shared by the total/path/neuron computations for one
// (sentence, focus) pair: the DoI sample inputs and their recorded traces.
struct InfluenceContext {
  AgreementQoI qoi;
  DoiSpec doi;
  std::vector<std::vector<Eigen::VectorXd>> sample_inputs;
  std::vector<ActivationTrace> traces;  // no logits recorded
};

InfluenceContext make_influence_context(const LstmModel& m, const Lexicon& lex,
                                        const TaskInstance& inst, Focus focus,
                                        int k_steps);

struct TotalInfluence {
  Eigen::RowVectorXd influence;         // 1 x d, averaged over samples
  Eigen::VectorXd attribution_vector;   // influence .* displacement
  double attribution = 0.0;
  double q_end = 0.0;      // q at the actual sentence
  double q_neutral = 0.0;  // q at the neutralized sentence
};

// Reverse-mode accumulation through the full model, averaged over the DoI
// samples. Throws on a non-finite gradient.
TotalInfluence total_influence(const LstmModel& m, const InfluenceContext& ctx);

// ---------------------------------------------------------------------------
// Per-edge local Jacobians, evaluated per DoI sample.

struct EdgeEval {
  enum class Kind : std::uint8_t {
    Diagonal,     // J = diag(scale_j); backward: V .* scale
    ScaledDense,  // J = diag(scale_j) * dense; backward: (V .* scale) * dense
    QoiRow,       // J = row (sample-independent seed edge)
    InputDense,   // terminal edge into Input, same shape as ScaledDense
  };
  Kind kind = Kind::Diagonal;
  Eigen::MatrixXd scale;  // k x dim(target node)
  const Eigen::MatrixXd* dense = nullptr;
  Eigen::RowVectorXd row;
};

// Per-graph flattened edge table: entries follow pred-list order per node.
struct EdgePlan {
  std::vector<EdgeEval> evals;           // one per (pred, node) pair
  std::vector<int> first_in_edge;        // node -> offset of its first entry
  int num_samples = 0;

  const EdgeEval& incoming(int node, int pred_slot) const {
    return evals[static_cast<size_t>(first_in_edge[static_cast<size_t>(node)] + pred_slot)];
  }
  EdgeEval& incoming(int node, int pred_slot) {
    return evals[static_cast<size_t>(first_in_edge[static_cast<size_t>(node)] + pred_slot)];
  }
};

EdgePlan make_edge_plan_skeleton(const UnrolledGraph& g, int k);

// Fills the plan with analytic local Jacobians evaluated on the sample
// traces. The legal edge set and the analytic forms per edge kind live here.
EdgePlan build_edge_plan(const LstmModel& m, const UnrolledGraph& g,
                         const std::vector<ActivationTrace>& traces,
                         const Eigen::RowVectorXd& qoi_row);

struct PathInfluenceResult {
  std::vector<double> attributions;  // aligned with the enumerated path list
  Eigen::MatrixXd rows;              // num_paths x d when requested, else 0 x 0
};

struct PathInfluenceOptions {
  bool with_rows = false;
};

// One depth-first traversal from the QoI side carrying a k x dim row block;
// each edge is crossed once per distinct path suffix. Results are scattered
// into the canonical (forward-enumeration) path order.
PathInfluenceResult accumulate_path_influence(const UnrolledGraph& g, const EdgePlan& plan,
                                              const std::vector<Path>& paths,
                                              const Eigen::VectorXd& displacement,
                                              const PathInfluenceOptions& opts = {});

// Convenience: plan construction plus accumulation for an LSTM context.
PathInfluenceResult path_influence(const LstmModel& m, const InfluenceContext& ctx,
                                   const UnrolledGraph& g, const std::vector<Path>& paths,
                                   const PathInfluenceOptions& opts = {});

struct NeuronInfluenceResult {
  std::vector<double> attributions;  // one per hidden coordinate
  double parent_attribution = 0.0;   // the unrefined path, same sample set
};

// Exact partition of the primary path's attribution across the layer-1 cell
// chain coordinates.
NeuronInfluenceResult neuron_influence(const LstmModel& m, const InfluenceContext& ctx,
                                       const UnrolledGraph& g, const Path& primary);

// q evaluated by a plain forward pass; used by completeness checks.
double evaluate_qoi(const LstmModel& m, const std::vector<Eigen::VectorXd>& inputs,
                    const AgreementQoI& qoi);

}  // namespace ipaths
