#include "ipaths/graph.hpp"

#include <algorithm>
#include <deque>
#include <ostream>

#include "json.hpp"

namespace ipaths {

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Input: return "input";
    case NodeKind::Forget: return "f";
    case NodeKind::InGate: return "i";
    case NodeKind::OutGate: return "o";
    case NodeKind::CandCell: return "ccand";
    case NodeKind::Cell: return "cell";
    case NodeKind::Hidden: return "hidden";
    case NodeKind::QoI: return "qoi";
  }
  return "?";
}

std::string node_id_string(const NodeId& id) {
  if (id.kind == NodeKind::Input || id.kind == NodeKind::QoI)
    return node_kind_name(id.kind);
  return std::string(node_kind_name(id.kind)) + ":" + std::to_string(id.layer) + ":" +
         std::to_string(id.time);
}

int UnrolledGraph::num_edges() const {
  int n = 0;
  for (const auto& s : succ) n += static_cast<int>(s.size());
  return n;
}

int UnrolledGraph::find(const NodeId& id) const {
  for (int i = 0; i < num_nodes(); ++i)
    if (nodes[static_cast<size_t>(i)] == id) return i;
  return -1;
}

namespace {

constexpr NodeKind kGateKinds[4] = {NodeKind::Forget, NodeKind::InGate,
                                    NodeKind::OutGate, NodeKind::CandCell};

}  // namespace

UnrolledGraph build_lstm_graph(int t_focus, int t_score) {
  if (t_focus < 0 || t_focus > t_score)
    throw std::invalid_argument("graph needs 0 <= t_focus <= t_score");

  // Emit nodes in (time, layer, kind) order, which is also topological:
  // within one step a layer's gates feed its cell, the cell its hidden
  // state, and the hidden state the next layer's gates.
  UnrolledGraph g;
  auto push = [&](NodeKind kind, int layer, int time) {
    g.nodes.push_back(NodeId{kind, layer, time});
    return static_cast<int>(g.nodes.size()) - 1;
  };
  g.input_node = push(NodeKind::Input, -1, t_focus);
  for (int t = t_focus; t <= t_score; ++t)
    for (int l = 0; l < 2; ++l) {
      for (NodeKind kind : kGateKinds) push(kind, l, t);
      push(NodeKind::Cell, l, t);
      push(NodeKind::Hidden, l, t);
    }
  g.qoi_node = push(NodeKind::QoI, -1, -1);
  g.t_focus = t_focus;
  g.t_readoff = t_score;

  const int n = g.num_nodes();
  g.succ.assign(static_cast<size_t>(n), {});
  g.pred.assign(static_cast<size_t>(n), {});
  auto idx = [&](NodeKind kind, int layer, int time) {
    // Inverse of the emission order above.
    const int step = (time - t_focus) * 12 + layer * 6;
    int k;
    switch (kind) {
      case NodeKind::Forget: k = 0; break;
      case NodeKind::InGate: k = 1; break;
      case NodeKind::OutGate: k = 2; break;
      case NodeKind::CandCell: k = 3; break;
      case NodeKind::Cell: k = 4; break;
      default: k = 5; break;  // Hidden
    }
    return 1 + step + k;
  };
  auto link = [&](int from, int to) {
    g.succ[static_cast<size_t>(from)].push_back(to);
    g.pred[static_cast<size_t>(to)].push_back(from);
  };

  for (NodeKind kind : kGateKinds) link(g.input_node, idx(kind, 0, t_focus));
  for (int t = t_focus; t <= t_score; ++t)
    for (int l = 0; l < 2; ++l) {
      for (NodeKind kind : {NodeKind::Forget, NodeKind::InGate, NodeKind::CandCell})
        link(idx(kind, l, t), idx(NodeKind::Cell, l, t));
      if (t > t_focus) link(idx(NodeKind::Cell, l, t - 1), idx(NodeKind::Cell, l, t));
      link(idx(NodeKind::OutGate, l, t), idx(NodeKind::Hidden, l, t));
      link(idx(NodeKind::Cell, l, t), idx(NodeKind::Hidden, l, t));
      if (l == 0)
        for (NodeKind kind : kGateKinds) link(idx(NodeKind::Hidden, 0, t), idx(kind, 1, t));
      if (t < t_score)
        for (NodeKind kind : kGateKinds)
          link(idx(NodeKind::Hidden, l, t), idx(kind, l, t + 1));
    }
  link(idx(NodeKind::Hidden, 1, t_score), g.qoi_node);

  // Keep only nodes that lie on some input-to-QoI route.
  std::vector<char> from_input(static_cast<size_t>(n), 0), to_qoi(static_cast<size_t>(n), 0);
  {
    std::deque<int> work{g.input_node};
    from_input[static_cast<size_t>(g.input_node)] = 1;
    while (!work.empty()) {
      const int v = work.front();
      work.pop_front();
      for (int s : g.succ[static_cast<size_t>(v)])
        if (!from_input[static_cast<size_t>(s)]) {
          from_input[static_cast<size_t>(s)] = 1;
          work.push_back(s);
        }
    }
    work.push_back(g.qoi_node);
    to_qoi[static_cast<size_t>(g.qoi_node)] = 1;
    while (!work.empty()) {
      const int v = work.front();
      work.pop_front();
      for (int p : g.pred[static_cast<size_t>(v)])
        if (!to_qoi[static_cast<size_t>(p)]) {
          to_qoi[static_cast<size_t>(p)] = 1;
          work.push_back(p);
        }
    }
  }

  std::vector<int> remap(static_cast<size_t>(n), -1);
  UnrolledGraph out;
  out.t_focus = t_focus;
  out.t_readoff = t_score;
  for (int v = 0; v < n; ++v)
    if (from_input[static_cast<size_t>(v)] && to_qoi[static_cast<size_t>(v)]) {
      remap[static_cast<size_t>(v)] = out.num_nodes();
      out.nodes.push_back(g.nodes[static_cast<size_t>(v)]);
    }
  out.succ.assign(out.nodes.size(), {});
  out.pred.assign(out.nodes.size(), {});
  for (int v = 0; v < n; ++v) {
    const int nv = remap[static_cast<size_t>(v)];
    if (nv < 0) continue;
    for (int s : g.succ[static_cast<size_t>(v)]) {
      const int ns = remap[static_cast<size_t>(s)];
      if (ns >= 0) {
        out.succ[static_cast<size_t>(nv)].push_back(ns);
        out.pred[static_cast<size_t>(ns)].push_back(nv);
      }
    }
  }
  for (auto& s : out.succ) std::sort(s.begin(), s.end());
  for (auto& p : out.pred) std::sort(p.begin(), p.end());
  out.input_node = remap[static_cast<size_t>(g.input_node)];
  out.qoi_node = remap[static_cast<size_t>(g.qoi_node)];
  return out;
}

UnrolledGraph build_graph_for_positions(int t_focus_pos, int t_verb_pos) {
  if (t_focus_pos < 0 || t_focus_pos >= t_verb_pos)
    throw std::invalid_argument("focus position must precede the verb position");
  // Position p enters the model one step after the begin marker, so its
  // trace time is p + 1; the verb is scored from the state one step earlier.
  return build_lstm_graph(t_focus_pos + 1, t_verb_pos);
}

std::uint64_t count_paths(const UnrolledGraph& g) {
  // Kahn order keeps this independent of the node emission order.
  const int n = g.num_nodes();
  std::vector<int> indeg(static_cast<size_t>(n), 0);
  for (int v = 0; v < n; ++v) indeg[static_cast<size_t>(v)] = static_cast<int>(g.pred[static_cast<size_t>(v)].size());
  std::deque<int> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[static_cast<size_t>(v)] == 0) ready.push_back(v);

  std::vector<std::uint64_t> from_input(static_cast<size_t>(n), 0);
  from_input[static_cast<size_t>(g.input_node)] = 1;
  int seen = 0;
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop_front();
    ++seen;
    for (int s : g.succ[static_cast<size_t>(v)]) {
      from_input[static_cast<size_t>(s)] += from_input[static_cast<size_t>(v)];
      if (--indeg[static_cast<size_t>(s)] == 0) ready.push_back(s);
    }
  }
  if (seen != n) throw std::logic_error("path graph has a cycle");
  return from_input[static_cast<size_t>(g.qoi_node)];
}

std::vector<Path> enumerate_paths(const UnrolledGraph& g, std::uint64_t cap) {
  const std::uint64_t total = count_paths(g);
  if (total > cap)
    throw PathCapExceeded("path count " + std::to_string(total) + " exceeds cap " +
                          std::to_string(cap));

  std::vector<Path> out;
  out.reserve(static_cast<size_t>(total));
  Path cur;
  cur.nodes.push_back(g.input_node);
  // Explicit stack of (node, next successor slot) in successor order.
  std::vector<std::pair<int, size_t>> stack{{g.input_node, 0}};
  while (!stack.empty()) {
    auto& [v, slot] = stack.back();
    if (v == g.qoi_node) {
      out.push_back(cur);
      stack.pop_back();
      cur.nodes.pop_back();
      continue;
    }
    const auto& succ = g.succ[static_cast<size_t>(v)];
    if (slot >= succ.size()) {
      stack.pop_back();
      cur.nodes.pop_back();
      continue;
    }
    const int next = succ[slot++];
    cur.nodes.push_back(next);
    stack.emplace_back(next, 0);
  }
  return out;
}

bool path_is_legal(const UnrolledGraph& g, const Path& p) {
  if (p.nodes.empty()) return false;
  if (p.nodes.front() != g.input_node || p.nodes.back() != g.qoi_node) return false;
  for (size_t i = 0; i + 1 < p.nodes.size(); ++i) {
    const auto& succ = g.succ[static_cast<size_t>(p.nodes[i])];
    if (std::find(succ.begin(), succ.end(), p.nodes[i + 1]) == succ.end()) return false;
  }
  return true;
}

Path primary_path(const UnrolledGraph& g) {
  Path p;
  auto need = [&](NodeKind kind, int layer, int time) {
    const int v = g.find(NodeId{kind, layer, time});
    if (v < 0) throw std::logic_error("primary path node missing from graph");
    p.nodes.push_back(v);
  };
  p.nodes.push_back(g.input_node);
  need(NodeKind::CandCell, 0, g.t_focus);
  need(NodeKind::Cell, 0, g.t_focus);
  need(NodeKind::Hidden, 0, g.t_focus);
  need(NodeKind::CandCell, 1, g.t_focus);
  for (int t = g.t_focus; t <= g.t_readoff; ++t) need(NodeKind::Cell, 1, t);
  need(NodeKind::Hidden, 1, g.t_readoff);
  p.nodes.push_back(g.qoi_node);
  if (!path_is_legal(g, p)) throw std::logic_error("primary path is not legal");
  return p;
}

NeuronPath refine_cell_chain(const UnrolledGraph& g, const Path& p, int neuron,
                             int hidden_size) {
  if (neuron < 0 || neuron >= hidden_size)
    throw std::invalid_argument("neuron index out of range");
  // The refinable stretch is the candidate cell followed by the run of cell
  // nodes it feeds; every internal edge there has a diagonal Jacobian.
  int first = -1;
  for (size_t i = 0; i + 1 < p.nodes.size(); ++i) {
    const NodeId& a = g.nodes[static_cast<size_t>(p.nodes[i])];
    const NodeId& b = g.nodes[static_cast<size_t>(p.nodes[i + 1])];
    if (a.kind == NodeKind::CandCell && b.kind == NodeKind::Cell)
      first = static_cast<int>(i);
  }
  if (first < 0) throw std::invalid_argument("path has no candidate-to-cell stretch");
  int last = first + 1;
  while (last + 1 < static_cast<int>(p.nodes.size()) &&
         g.nodes[static_cast<size_t>(p.nodes[static_cast<size_t>(last + 1)])].kind ==
             NodeKind::Cell)
    ++last;
  NeuronPath np;
  np.parent = &p;
  np.chain_first = first;
  np.chain_last = last;
  np.neuron = neuron;
  return np;
}

void dump_paths_jsonl(const UnrolledGraph& g, const std::vector<Path>& paths,
                      std::ostream& out, const FileMeta& meta) {
  nlohmann::json head;
  head["tool_version"] = meta.tool_version;
  head["config_hash"] = meta.config_hash;
  head["num_paths"] = paths.size();
  out << head.dump() << "\n";
  for (const Path& p : paths) {
    nlohmann::json arr = nlohmann::json::array();
    for (int v : p.nodes) arr.push_back(node_id_string(g.nodes[static_cast<size_t>(v)]));
    out << arr.dump() << "\n";
  }
}

}  // namespace ipaths
