#include "ipaths/influence.hpp"

#include <functional>
#include <stdexcept>
#include <unordered_map>

#include "ipaths/backprop.hpp"

namespace ipaths {

Eigen::RowVectorXd AgreementQoI::decoder_row(const LstmModel& m) const {
  return m.decoder_w.row(verb_correct) - m.decoder_w.row(verb_wrong);
}

Eigen::VectorXd DoiSpec::point(int j) const {
  if (j < 1 || j > k_steps) throw std::invalid_argument("sample index out of range");
  const double a = static_cast<double>(j) / static_cast<double>(k_steps);
  return w_neutral + a * (w_end - w_neutral);
}

InfluenceContext make_influence_context(const LstmModel& m, const Lexicon& lex,
                                        const TaskInstance& inst, Focus focus,
                                        int k_steps) {
  InfluenceContext ctx;
  int focus_pos;
  if (focus == Focus::Subject) {
    focus_pos = inst.t_sub;
  } else {
    if (!inst.t_int)
      throw std::invalid_argument("instance has no intervening noun to focus on");
    focus_pos = *inst.t_int;
  }
  const TokenId tok = inst.tokens[static_cast<size_t>(focus_pos)];
  const TokenId other = lex.number_swap(tok);
  if (other == tok)
    throw std::invalid_argument("focused token has no number-swapped form");

  ctx.qoi.verb_correct = inst.verb_correct;
  ctx.qoi.verb_wrong = inst.verb_wrong;
  ctx.qoi.read_time = score_time(inst.t_verb);

  ctx.doi.t_focus = focus_pos + 1;  // consumed one step after the begin marker
  ctx.doi.k_steps = k_steps;
  ctx.doi.w_end = m.embedding.row(tok).transpose();
  // Number-neutral point: midway between the two number forms of the lemma.
  ctx.doi.w_neutral =
      0.5 * (m.embedding.row(tok) + m.embedding.row(other)).transpose();

  const auto base = embed_with_bos(m, lex.id("<bos>"), inst.tokens);
  ctx.sample_inputs.reserve(static_cast<size_t>(k_steps));
  ctx.traces.reserve(static_cast<size_t>(k_steps));
  for (int j = 1; j <= k_steps; ++j) {
    auto inputs = base;
    inputs[static_cast<size_t>(ctx.doi.t_focus)] = ctx.doi.point(j);
    ctx.traces.push_back(forward(m, inputs, /*want_logits=*/false));
    ctx.sample_inputs.push_back(std::move(inputs));
  }
  return ctx;
}

double evaluate_qoi(const LstmModel& m, const std::vector<Eigen::VectorXd>& inputs,
                    const AgreementQoI& qoi) {
  const ActivationTrace trace = forward(m, inputs, /*want_logits=*/false);
  const Eigen::VectorXd& h =
      trace.steps[static_cast<size_t>(qoi.read_time)][static_cast<size_t>(m.num_layers - 1)].h;
  return qoi.decoder_row(m).dot(h) + m.decoder_b(qoi.verb_correct) -
         m.decoder_b(qoi.verb_wrong);
}

TotalInfluence total_influence(const LstmModel& m, const InfluenceContext& ctx) {
  const Eigen::RowVectorXd qoi_row = ctx.qoi.decoder_row(m);
  TotalInfluence out;
  out.influence = Eigen::RowVectorXd::Zero(m.embedding_dim);
  for (const ActivationTrace& trace : ctx.traces)
    out.influence +=
        input_gradient(m, trace, ctx.qoi.read_time, qoi_row, ctx.doi.t_focus)
            .transpose();
  out.influence /= static_cast<double>(ctx.traces.size());

  const Eigen::VectorXd dx = ctx.doi.displacement();
  out.attribution_vector = out.influence.transpose().cwiseProduct(dx);
  out.attribution = out.attribution_vector.sum();

  auto neutral = ctx.sample_inputs.front();
  neutral[static_cast<size_t>(ctx.doi.t_focus)] = ctx.doi.w_neutral;
  out.q_neutral = evaluate_qoi(m, neutral, ctx.qoi);
  auto end = ctx.sample_inputs.front();
  end[static_cast<size_t>(ctx.doi.t_focus)] = ctx.doi.w_end;
  out.q_end = evaluate_qoi(m, end, ctx.qoi);
  return out;
}

EdgePlan make_edge_plan_skeleton(const UnrolledGraph& g, int k) {
  EdgePlan plan;
  plan.num_samples = k;
  plan.first_in_edge.resize(static_cast<size_t>(g.num_nodes()));
  int offset = 0;
  for (int v = 0; v < g.num_nodes(); ++v) {
    plan.first_in_edge[static_cast<size_t>(v)] = offset;
    offset += static_cast<int>(g.pred[static_cast<size_t>(v)].size());
  }
  plan.evals.resize(static_cast<size_t>(offset));
  return plan;
}

namespace {

// Derivative of the activation through its recorded value: a(1-a) for the
// sigmoid gates, 1-g^2 for the tanh candidate.
Eigen::VectorXd act_deriv(NodeKind kind, const LayerStep& s) {
  switch (kind) {
    case NodeKind::Forget:
      return s.act[kGateF].array() * (1.0 - s.act[kGateF].array());
    case NodeKind::InGate:
      return s.act[kGateI].array() * (1.0 - s.act[kGateI].array());
    case NodeKind::OutGate:
      return s.act[kGateO].array() * (1.0 - s.act[kGateO].array());
    default:
      return 1.0 - s.act[kGateG].array().square();
  }
}

int gate_of(NodeKind kind) {
  switch (kind) {
    case NodeKind::Forget: return kGateF;
    case NodeKind::InGate: return kGateI;
    case NodeKind::OutGate: return kGateO;
    default: return kGateG;
  }
}

bool is_gate(NodeKind kind) {
  return kind == NodeKind::Forget || kind == NodeKind::InGate ||
         kind == NodeKind::OutGate || kind == NodeKind::CandCell;
}

std::string path_key(const std::vector<int>& nodes) {
  std::string key;
  key.reserve(nodes.size() * sizeof(int));
  for (int v : nodes)
    key.append(reinterpret_cast<const char*>(&v), sizeof(int));
  return key;
}

}  // namespace

EdgePlan build_edge_plan(const LstmModel& m, const UnrolledGraph& g,
                         const std::vector<ActivationTrace>& traces,
                         const Eigen::RowVectorXd& qoi_row) {
  const int k = static_cast<int>(traces.size());
  const int H = m.hidden_size;
  EdgePlan plan = make_edge_plan_skeleton(g, k);

  auto step_of = [&](const ActivationTrace& tr, int l, int t) -> const LayerStep& {
    return tr.steps[static_cast<size_t>(t)][static_cast<size_t>(l)];
  };

  for (int v = 0; v < g.num_nodes(); ++v) {
    const NodeId target = g.nodes[static_cast<size_t>(v)];
    const auto& preds = g.pred[static_cast<size_t>(v)];
    for (size_t slot = 0; slot < preds.size(); ++slot) {
      const NodeId source = g.nodes[static_cast<size_t>(preds[slot])];
      EdgeEval& e = plan.incoming(v, static_cast<int>(slot));

      if (target.kind == NodeKind::QoI) {
        e.kind = EdgeEval::Kind::QoiRow;
        e.row = qoi_row;
        continue;
      }

      if (is_gate(target.kind)) {
        // Gate preactivation is W x + U h_prev + b; the three source kinds
        // (attribution input, lower-layer hidden, previous hidden) pick the
        // matrix, and the recorded activation supplies the pointwise slope.
        e.scale.resize(k, H);
        for (int j = 0; j < k; ++j)
          e.scale.row(j) =
              act_deriv(target.kind, step_of(traces[static_cast<size_t>(j)],
                                             target.layer, target.time))
                  .transpose();
        const int gate = gate_of(target.kind);
        if (source.kind == NodeKind::Input) {
          e.kind = EdgeEval::Kind::InputDense;
          e.dense = &m.layer[0].w[gate];
        } else if (source.kind == NodeKind::Hidden && source.layer == target.layer - 1) {
          e.kind = EdgeEval::Kind::ScaledDense;
          e.dense = &m.layer[target.layer].w[gate];
        } else if (source.kind == NodeKind::Hidden && source.layer == target.layer &&
                   source.time == target.time - 1) {
          e.kind = EdgeEval::Kind::ScaledDense;
          e.dense = &m.layer[target.layer].u[gate];
        } else {
          throw std::logic_error("unexpected edge into a gate node");
        }
        continue;
      }

      e.kind = EdgeEval::Kind::Diagonal;
      e.scale.resize(k, H);
      if (target.kind == NodeKind::Cell) {
        for (int j = 0; j < k; ++j) {
          const ActivationTrace& tr = traces[static_cast<size_t>(j)];
          const LayerStep& s = step_of(tr, target.layer, target.time);
          Eigen::VectorXd d;
          switch (source.kind) {
            case NodeKind::Forget:
              // dc/df = c_prev; a zero previous state contributes nothing.
              d = target.time == 0
                      ? Eigen::VectorXd::Zero(H).eval()
                      : step_of(tr, target.layer, target.time - 1).c;
              break;
            case NodeKind::InGate:
              d = s.act[kGateG];
              break;
            case NodeKind::CandCell:
              d = s.act[kGateI];
              break;
            case NodeKind::Cell:
              d = s.act[kGateF];
              break;
            default:
              throw std::logic_error("unexpected edge into a cell node");
          }
          e.scale.row(j) = d.transpose();
        }
      } else if (target.kind == NodeKind::Hidden) {
        for (int j = 0; j < k; ++j) {
          const LayerStep& s =
              step_of(traces[static_cast<size_t>(j)], target.layer, target.time);
          const Eigen::ArrayXd tanh_c = s.c.array().tanh();
          Eigen::VectorXd d;
          if (source.kind == NodeKind::OutGate) {
            d = tanh_c.matrix();
          } else if (source.kind == NodeKind::Cell) {
            d = (s.act[kGateO].array() * (1.0 - tanh_c.square())).matrix();
          } else {
            throw std::logic_error("unexpected edge into a hidden node");
          }
          e.scale.row(j) = d.transpose();
        }
      } else {
        throw std::logic_error("unexpected target node kind");
      }
    }
  }
  return plan;
}

PathInfluenceResult accumulate_path_influence(const UnrolledGraph& g, const EdgePlan& plan,
                                              const std::vector<Path>& paths,
                                              const Eigen::VectorXd& displacement,
                                              const PathInfluenceOptions& opts) {
  const int k = plan.num_samples;
  PathInfluenceResult out;
  out.attributions.assign(paths.size(), 0.0);
  if (opts.with_rows)
    out.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(paths.size()),
                                     displacement.size());

  std::unordered_map<std::string, int> canonical;
  canonical.reserve(paths.size() * 2);
  for (size_t i = 0; i < paths.size(); ++i)
    canonical.emplace(path_key(paths[i].nodes), static_cast<int>(i));
  if (canonical.size() != paths.size())
    throw std::invalid_argument("duplicate paths in canonical list");

  // Displacement folded through each distinct input matrix once.
  std::unordered_map<const Eigen::MatrixXd*, Eigen::VectorXd> folded;

  size_t emitted = 0;
  std::vector<int> rev{g.qoi_node};  // current suffix, QoI first

  // One backward depth-first sweep; every distinct path suffix crosses its
  // edge exactly once, so shared suffixes are paid for once.
  std::function<void(int, const Eigen::MatrixXd&)> walk = [&](int v,
                                                              const Eigen::MatrixXd& b) {
    const auto& preds = g.pred[static_cast<size_t>(v)];
    for (size_t slot = 0; slot < preds.size(); ++slot) {
      const int p = preds[slot];
      const EdgeEval& e = plan.incoming(v, static_cast<int>(slot));

      if (e.kind == EdgeEval::Kind::InputDense) {
        rev.push_back(p);
        std::vector<int> fwd(rev.rbegin(), rev.rend());
        const auto it = canonical.find(path_key(fwd));
        if (it == canonical.end())
          throw std::logic_error("traversal found a path missing from the canonical list");

        auto fit = folded.find(e.dense);
        if (fit == folded.end())
          fit = folded.emplace(e.dense, (*e.dense) * displacement).first;
        const Eigen::MatrixXd scaled = b.cwiseProduct(e.scale);
        out.attributions[static_cast<size_t>(it->second)] =
            (scaled * fit->second).mean();
        if (opts.with_rows)
          out.rows.row(it->second) =
              (scaled * (*e.dense)).colwise().mean();
        ++emitted;
        rev.pop_back();
        continue;
      }

      Eigen::MatrixXd bp;
      switch (e.kind) {
        case EdgeEval::Kind::QoiRow:
          bp = b.col(0) * e.row;
          break;
        case EdgeEval::Kind::Diagonal:
          bp = b.cwiseProduct(e.scale);
          break;
        case EdgeEval::Kind::ScaledDense:
          bp.noalias() = b.cwiseProduct(e.scale) * (*e.dense);
          break;
        default:
          throw std::logic_error("unexpected edge kind");
      }
      rev.push_back(p);
      walk(p, bp);
      rev.pop_back();
    }
  };

  walk(g.qoi_node, Eigen::MatrixXd::Ones(k, 1));
  if (emitted != paths.size())
    throw std::logic_error("traversal path count disagrees with the canonical list");
  return out;
}

PathInfluenceResult path_influence(const LstmModel& m, const InfluenceContext& ctx,
                                   const UnrolledGraph& g, const std::vector<Path>& paths,
                                   const PathInfluenceOptions& opts) {
  const EdgePlan plan = build_edge_plan(m, g, ctx.traces, ctx.qoi.decoder_row(m));
  return accumulate_path_influence(g, plan, paths, ctx.doi.displacement(), opts);
}

NeuronInfluenceResult neuron_influence(const LstmModel& m, const InfluenceContext& ctx,
                                       const UnrolledGraph& g, const Path& primary) {
  const int H = m.hidden_size;
  const int k = static_cast<int>(ctx.traces.size());
  const EdgePlan plan = build_edge_plan(m, g, ctx.traces, ctx.qoi.decoder_row(m));
  const NeuronPath chain = refine_cell_chain(g, primary, 0, H);

  auto edge_between = [&](int path_idx) -> const EdgeEval& {
    // Edge from primary.nodes[path_idx] into primary.nodes[path_idx + 1].
    const int v = primary.nodes[static_cast<size_t>(path_idx + 1)];
    const auto& preds = g.pred[static_cast<size_t>(v)];
    for (size_t slot = 0; slot < preds.size(); ++slot)
      if (preds[slot] == primary.nodes[static_cast<size_t>(path_idx)])
        return plan.incoming(v, static_cast<int>(slot));
    throw std::logic_error("primary path edge missing from plan");
  };

  // Downstream rows: from the QoI back to the end of the cell chain.
  Eigen::MatrixXd v_rows = Eigen::MatrixXd::Ones(k, 1);
  for (int i = static_cast<int>(primary.nodes.size()) - 2; i >= chain.chain_last; --i) {
    const EdgeEval& e = edge_between(i);
    switch (e.kind) {
      case EdgeEval::Kind::QoiRow:
        v_rows = v_rows.col(0) * e.row;
        break;
      case EdgeEval::Kind::Diagonal:
        v_rows = v_rows.cwiseProduct(e.scale);
        break;
      case EdgeEval::Kind::ScaledDense:
        v_rows = v_rows.cwiseProduct(e.scale) * (*e.dense);
        break;
      default:
        throw std::logic_error("unexpected downstream edge");
    }
  }

  // The chain itself: a pure elementwise product per coordinate.
  Eigen::MatrixXd diag = Eigen::MatrixXd::Ones(k, H);
  for (int i = chain.chain_last - 1; i >= chain.chain_first; --i)
    diag = diag.cwiseProduct(edge_between(i).scale);

  // Upstream columns: from the displacement forward into the chain head.
  Eigen::MatrixXd u_cols(k, 0);
  {
    const Eigen::VectorXd dx = ctx.doi.displacement();
    Eigen::MatrixXd a;
    for (int i = 0; i < chain.chain_first; ++i) {
      const EdgeEval& e = edge_between(i);
      if (e.kind == EdgeEval::Kind::InputDense) {
        const Eigen::VectorXd w = (*e.dense) * dx;
        a = e.scale.array().rowwise() * w.transpose().array();
      } else if (e.kind == EdgeEval::Kind::Diagonal) {
        a = a.cwiseProduct(e.scale);
      } else if (e.kind == EdgeEval::Kind::ScaledDense) {
        a = (a * e.dense->transpose()).cwiseProduct(e.scale);
      } else {
        throw std::logic_error("unexpected upstream edge");
      }
    }
    u_cols = a;
  }

  NeuronInfluenceResult out;
  out.attributions.assign(static_cast<size_t>(H), 0.0);
  const Eigen::MatrixXd prod = v_rows.cwiseProduct(diag).cwiseProduct(u_cols);
  for (int i = 0; i < H; ++i) out.attributions[static_cast<size_t>(i)] = prod.col(i).mean();
  // Reduced in a different order so the partition check is meaningful.
  out.parent_attribution =
      v_rows.cwiseProduct(diag).cwiseProduct(u_cols).rowwise().sum().mean();
  return out;
}

}  // namespace ipaths
