#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipaths/types.hpp"

namespace ipaths {

enum class NodeKind : std::uint8_t {
  Input,     // the varied embedding position
  Forget,
  InGate,
  OutGate,
  CandCell,  // tanh candidate cell
  Cell,
  Hidden,
  QoI,
};

const char* node_kind_name(NodeKind k);

struct NodeId {
  NodeKind kind = NodeKind::Input;
  int layer = -1;  // -1 for Input/QoI
  int time = -1;   // trace time; -1 for QoI

  bool operator==(const NodeId&) const = default;
};

// "ccand:0:1", "cell:1:3", "input", "qoi"
std::string node_id_string(const NodeId& id);

// DAG over whole-gate-vector nodes plus the attribution input and the QoI.
// Successor and predecessor lists are in a fixed canonical order so that
// enumeration and traversal are deterministic.
struct UnrolledGraph {
  std::vector<NodeId> nodes;
  std::vector<std::vector<int>> succ;
  std::vector<std::vector<int>> pred;
  int input_node = -1;
  int qoi_node = -1;
  int t_focus = -1;    // trace time whose input embedding is varied
  int t_readoff = -1;  // trace time whose hidden state feeds the QoI

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_edges() const;
  int find(const NodeId& id) const;  // -1 when absent
};

// Gate-level graph for a 2-layer LSTM between the focus input and the logit
// row scoring the verb slot. `t_focus` is the trace time at which the noun's
// embedding enters the model; `t_score` the trace time of the read-off
// (the verb position minus one in sentence coordinates, see score_time).
// Only nodes on some Input-to-QoI path are kept. Requires t_focus <= t_score.
UnrolledGraph build_lstm_graph(int t_focus, int t_score);

// Convenience wrapper in sentence coordinates: focus position and verb
// position with t_focus_pos < t_verb_pos.
UnrolledGraph build_graph_for_positions(int t_focus_pos, int t_verb_pos);

struct Path {
  std::vector<int> nodes;  // graph node indices, Input first, QoI last
};

// Dynamic-programming count over a topological order; the independent
// cross-check for enumerate_paths.
std::uint64_t count_paths(const UnrolledGraph& g);

struct PathCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Depth-first enumeration in successor order. Throws PathCapExceeded when
// the DP count is beyond `cap`.
std::vector<Path> enumerate_paths(const UnrolledGraph& g, std::uint64_t cap = 10'000'000);

// The candidate-cell route: input -> ccand^0 -> cell^0 -> hidden^0 ->
// ccand^1 -> (cell^1)* -> hidden^1 -> qoi.
Path primary_path(const UnrolledGraph& g);

// True when every consecutive pair is a legal gate-level edge.
bool path_is_legal(const UnrolledGraph& g, const Path& p);

// A gate-level path with its maximal elementwise (diagonal-Jacobian) segment
// restricted to one coordinate. chain_first/chain_last index into
// parent.nodes and span the ccand -> cell... -> cell stretch whose internal
// edges are all diagonal.
struct NeuronPath {
  const Path* parent = nullptr;
  int chain_first = 0;
  int chain_last = 0;
  int neuron = 0;
};

// Restricts the layer-1 cell chain of `p` to coordinate `neuron`.
// Throws std::invalid_argument when the path has no such elementwise segment
// or the index is out of range.
NeuronPath refine_cell_chain(const UnrolledGraph& g, const Path& p, int neuron,
                             int hidden_size);

// JSON lines, one path per line as an array of node-id strings.
void dump_paths_jsonl(const UnrolledGraph& g, const std::vector<Path>& paths,
                      std::ostream& out, const FileMeta& meta);

}  // namespace ipaths
