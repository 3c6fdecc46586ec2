#include "ipaths/compression.hpp"

#include <stdexcept>

#include "ipaths/corpus.hpp"
#include "ipaths/parallel.hpp"

namespace ipaths {

const char* scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::CbarSI: return "Cbar_si";
    case SchemeKind::CbarS: return "Cbar_s";
    case SchemeKind::CbarI: return "Cbar_i";
    case SchemeKind::CSI: return "C_si";
    case SchemeKind::CS: return "C_s";
    case SchemeKind::CI: return "C_i";
    case SchemeKind::Uncompressed: return "C";
  }
  return "?";
}

std::vector<SchemeKind> all_schemes() {
  return {SchemeKind::CbarSI, SchemeKind::CbarS, SchemeKind::CbarI,
          SchemeKind::CSI,    SchemeKind::CS,    SchemeKind::CI,
          SchemeKind::Uncompressed};
}

GateAverages compute_gate_averages(const LstmModel& m, TokenId bos,
                                   std::span<const TaskInstance> data) {
  if (data.empty()) throw std::invalid_argument("no instances to average over");
  const TaskKind task = data.front().task;
  const size_t len = data.front().tokens.size();
  for (const TaskInstance& inst : data)
    if (inst.task != task || inst.tokens.size() != len)
      throw std::invalid_argument("gate averages need a single template");

  const int T = static_cast<int>(len) + 1;  // BOS-prefixed trace length
  const int H = m.hidden_size;
  GateAverages avg;
  avg.length = T;
  for (int l = 0; l < 2; ++l)
    for (int gate = 0; gate < kNumGates; ++gate)
      avg.mean[l][gate] = Eigen::MatrixXd::Zero(H, T);

  for (const TaskInstance& inst : data) {
    const auto inputs = embed_with_bos(m, bos, inst.tokens);
    const ActivationTrace trace = forward(m, inputs, /*want_logits=*/false);
    for (int t = 0; t < T; ++t)
      for (int l = 0; l < 2; ++l)
        for (int gate = 0; gate < kNumGates; ++gate)
          avg.mean[l][gate].col(t) += trace.steps[t][l].act[gate];
  }
  const double n = static_cast<double>(data.size());
  for (int l = 0; l < 2; ++l)
    for (int gate = 0; gate < kNumGates; ++gate) avg.mean[l][gate] /= n;
  return avg;
}

namespace {

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return 1.0 / (1.0 + (-x.array()).exp());
}

}  // namespace

ActivationTrace compressed_forward(const LstmModel& m, TokenId bos,
                                   const TaskInstance& inst,
                                   const CompressionScheme& scheme,
                                   const GateAverages& averages) {
  const auto inputs = embed_with_bos(m, bos, inst.tokens);
  if (scheme.uncompressed) return forward(m, inputs);

  const int T = static_cast<int>(inputs.size());
  if (averages.length != T)
    throw std::invalid_argument("gate averages cover a different template");
  if (scheme.span_begin < 0 || scheme.span_end > T ||
      scheme.span_begin > scheme.span_end)
    throw std::invalid_argument("intervention span outside the trace");

  const int H = m.hidden_size;
  ActivationTrace trace;
  trace.inputs = inputs;
  trace.steps.resize(static_cast<size_t>(T));
  trace.logits.resize(static_cast<size_t>(T));

  std::array<Eigen::VectorXd, 2> h_prev, c_prev;
  for (int l = 0; l < 2; ++l) {
    h_prev[l] = Eigen::VectorXd::Zero(H);
    c_prev[l] = Eigen::VectorXd::Zero(H);
  }

  for (int t = 0; t < T; ++t) {
    const bool in_span = t >= scheme.span_begin && t < scheme.span_end;
    const Eigen::VectorXd* x = &trace.inputs[static_cast<size_t>(t)];
    for (int l = 0; l < 2; ++l) {
      LayerStep& step = trace.steps[static_cast<size_t>(t)][static_cast<size_t>(l)];
      const LstmLayerParams& p = m.layer[l];
      for (int gate = 0; gate < kNumGates; ++gate)
        step.pre[gate] = p.w[gate] * (*x) + p.u[gate] * h_prev[l] + p.b[gate];
      for (int gate = 0; gate < kNumGates; ++gate) {
        if (in_span && !scheme.preserved.count(GateSite{gate, l, t})) {
          step.act[gate] = averages.mean[l][gate].col(t);
        } else if (gate == kGateG) {
          step.act[gate] = step.pre[gate].array().tanh();
        } else {
          step.act[gate] = sigmoid(step.pre[gate]);
        }
      }
      // The carried state is always recomputed from the gate values in play.
      step.c = step.act[kGateF].cwiseProduct(c_prev[l]) +
               step.act[kGateI].cwiseProduct(step.act[kGateG]);
      step.h = step.act[kGateO].cwiseProduct(step.c.array().tanh().matrix());
      c_prev[l] = step.c;
      h_prev[l] = step.h;
      x = &step.h;
    }
    trace.logits[static_cast<size_t>(t)] = m.decoder_w * h_prev[1] + m.decoder_b;
  }
  return trace;
}

CompressionScheme make_scheme(SchemeKind kind, TaskKind task, bool strict_span) {
  if (task == TaskKind::Simple && kind != SchemeKind::Uncompressed)
    throw std::invalid_argument("compression schemes need an intervening noun");

  CompressionScheme s;
  s.name = scheme_name(kind);
  if (kind == SchemeKind::Uncompressed) {
    s.uncompressed = true;
    return s;
  }

  const int t_sub = template_t_sub(task);
  const int t_int = template_t_int(task);
  const int t_verb = template_t_verb(task);
  // Trace time t holds the state after consuming sentence position t-1.
  s.span_begin = strict_span ? t_sub + 2 : 1;
  s.span_end = t_verb + 1;

  std::set<GateSite> named;
  const bool wants_subject = kind == SchemeKind::CS || kind == SchemeKind::CSI ||
                             kind == SchemeKind::CbarS || kind == SchemeKind::CbarSI;
  const bool wants_interv = kind == SchemeKind::CI || kind == SchemeKind::CSI ||
                            kind == SchemeKind::CbarI || kind == SchemeKind::CbarSI;
  for (int l = 0; l < 2; ++l) {
    if (wants_subject) named.insert(GateSite{kGateG, l, t_sub + 1});
    if (wants_interv) named.insert(GateSite{kGateG, l, t_int + 1});
  }

  const bool complement = kind == SchemeKind::CbarS || kind == SchemeKind::CbarI ||
                          kind == SchemeKind::CbarSI;
  if (complement) {
    for (int t = s.span_begin; t < s.span_end; ++t)
      for (int l = 0; l < 2; ++l)
        for (int gate = 0; gate < kNumGates; ++gate)
          if (!named.count(GateSite{gate, l, t}))
            s.preserved.insert(GateSite{gate, l, t});
  } else {
    // Named sites outside the span are computed anyway; keep the invariant
    // that preserved sites lie within the span.
    for (const GateSite& site : named)
      if (std::get<2>(site) >= s.span_begin && std::get<2>(site) < s.span_end)
        s.preserved.insert(site);
  }
  return s;
}

double compressed_na_accuracy(const LstmModel& m, TokenId bos,
                              std::span<const TaskInstance> data,
                              const CompressionScheme& scheme,
                              const GateAverages& averages) {
  if (data.empty()) return 0.0;
  int correct = 0;
  for (const TaskInstance& inst : data) {
    const ActivationTrace trace = compressed_forward(m, bos, inst, scheme, averages);
    const Eigen::VectorXd& h =
        trace.steps[static_cast<size_t>(score_time(inst.t_verb))][1].h;
    const double s_good = m.decoder_w.row(inst.verb_correct).dot(h) +
                          m.decoder_b(inst.verb_correct);
    const double s_bad = m.decoder_w.row(inst.verb_wrong).dot(h) +
                         m.decoder_b(inst.verb_wrong);
    if (s_good > s_bad) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<CompressionRow> run_schemes(const LstmModel& m, TokenId bos,
                                        std::span<const TaskDatasets> datasets,
                                        const CompressionOptions& opts) {
  const auto schemes = all_schemes();

  struct Job {
    size_t dataset;
    size_t cond;
    size_t scheme;
  };
  std::vector<Job> jobs;
  std::vector<std::vector<GateAverages>> averages(datasets.size());
  std::vector<std::vector<CompressionScheme>> built(datasets.size());

  for (size_t d = 0; d < datasets.size(); ++d) {
    const TaskDatasets& ds = datasets[d];
    if (ds.task == TaskKind::Simple)
      throw std::invalid_argument("compression runs need an intervening noun");
    if (ds.by_condition.empty())
      throw std::invalid_argument("no conditions in compression dataset");

    built[d].reserve(schemes.size());
    for (SchemeKind k : schemes)
      built[d].push_back(make_scheme(k, ds.task, opts.strict_span));

    if (opts.pool_per_task) {
      std::vector<TaskInstance> pooled;
      for (const auto& [cond, data] : ds.by_condition)
        pooled.insert(pooled.end(), data.begin(), data.end());
      averages[d].push_back(compute_gate_averages(m, bos, pooled));
    } else {
      for (const auto& [cond, data] : ds.by_condition)
        averages[d].push_back(compute_gate_averages(m, bos, data));
    }
    for (size_t c = 0; c < ds.by_condition.size(); ++c)
      for (size_t s = 0; s < schemes.size(); ++s) jobs.push_back({d, c, s});
  }

  std::vector<double> acc(jobs.size(), 0.0);
  parallel_for(jobs.size(), opts.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const TaskDatasets& ds = datasets[job.dataset];
    const GateAverages& avg =
        averages[job.dataset][opts.pool_per_task ? 0 : job.cond];
    acc[j] = compressed_na_accuracy(m, bos, ds.by_condition[job.cond].second,
                                    built[job.dataset][job.scheme], avg);
  });

  std::vector<CompressionRow> rows;
  size_t j = 0;
  for (size_t d = 0; d < datasets.size(); ++d) {
    const TaskDatasets& ds = datasets[d];
    CompressionRow mean;
    mean.task = ds.task;
    mean.is_mean = true;
    for (size_t c = 0; c < ds.by_condition.size(); ++c) {
      CompressionRow row;
      row.task = ds.task;
      row.condition = ds.by_condition[c].first;
      for (size_t s = 0; s < schemes.size(); ++s) {
        row.accuracy[s] = acc[j++];
        mean.accuracy[s] += row.accuracy[s];
      }
      rows.push_back(row);
    }
    for (size_t s = 0; s < schemes.size(); ++s)
      mean.accuracy[s] /= static_cast<double>(ds.by_condition.size());
    rows.push_back(mean);
  }
  return rows;
}

}  // namespace ipaths
