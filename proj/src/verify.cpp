#include "ipaths/verify.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "ipaths/backprop.hpp"
#include "ipaths/corpus.hpp"
#include "ipaths/graph.hpp"
#include "ipaths/influence.hpp"
#include "ipaths/metrics.hpp"

namespace ipaths {

namespace {

struct Checker {
  const LineSink& sink;
  int failures = 0;

  void report(bool ok, const std::string& name, const std::string& detail) {
    std::string line = ok ? "ok   " : "FAIL ";
    line += name;
    if (!detail.empty()) line += ": " + detail;
    if (!ok) ++failures;
    if (sink) sink(line);
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max({1.0, std::abs(got), std::abs(want)});
}

}  // namespace

int run_verification(const LstmModel& m, const Lexicon& lex,
                     const VerifyOptions& opts, const LineSink& sink) {
  Checker check{sink};
  const std::uint64_t kExpected[3] = {16, 6946, 41561};
  const TaskKind kTasks[3] = {TaskKind::Simple, TaskKind::NounPP, TaskKind::NounPPAdv};

  // Path bookkeeping: the DP count, the explicit enumeration, and the frozen
  // template totals must all agree; every enumerated path must be legal.
  for (int ti = 0; ti < 3; ++ti) {
    const TaskKind task = kTasks[ti];
    const UnrolledGraph g =
        build_graph_for_positions(template_t_sub(task), template_t_verb(task));
    const std::uint64_t dp = count_paths(g);
    const auto paths = enumerate_paths(g);
    std::ostringstream detail;
    detail << "dp=" << dp << " enumerated=" << paths.size();
    bool ok = dp == paths.size() && dp == kExpected[ti];
    bool legal = path_is_legal(g, primary_path(g));
    for (size_t i = 0; i < paths.size() && legal; i += 997)
      legal = path_is_legal(g, paths[i]);
    check.report(ok, std::string("path-count ") + to_string(task), detail.str());
    check.report(legal, std::string("path-legality ") + to_string(task), "");
  }

  // Sentences used by the numerical checks.
  auto sentence_set = [&](TaskKind task) {
    const Condition cond = task == TaskKind::Simple ? Condition::S : Condition::SP;
    return generate_task_dataset(lex, task, cond, opts.sentences_per_task, opts.seed);
  };

  // Conservation: the path decomposition must re-sum to the reverse-mode
  // total influence for every task and focus.
  for (const TaskKind task : kTasks) {
    const auto data = sentence_set(task);
    std::vector<Focus> foci = {Focus::Subject};
    if (task != TaskKind::Simple) foci.push_back(Focus::Intervening);
    for (const Focus focus : foci) {
      const int fpos = focus == Focus::Subject ? template_t_sub(task)
                                               : template_t_int(task);
      const UnrolledGraph g = build_graph_for_positions(fpos, template_t_verb(task));
      const auto paths = enumerate_paths(g);
      double worst = 0.0;
      double worst_neuron = 0.0;
      for (const TaskInstance& inst : data) {
        const InfluenceContext ctx =
            make_influence_context(m, lex, inst, focus, opts.k_steps);
        const PathInfluenceResult res = path_influence(m, ctx, g, paths);
        double sum = 0.0, abs_sum = 0.0;
        for (double a : res.attributions) {
          sum += a;
          abs_sum += std::abs(a);
        }
        const TotalInfluence total = total_influence(m, ctx);
        worst = std::max(worst, std::abs(sum - total.attribution) /
                                    std::max({1.0, std::abs(total.attribution), abs_sum}));

        const NeuronInfluenceResult nres = neuron_influence(m, ctx, g, primary_path(g));
        double nsum = 0.0;
        for (double a : nres.attributions) nsum += a;
        worst_neuron = std::max(worst_neuron, rel_err(nsum, nres.parent_attribution));
      }
      const std::string cell = std::string(to_string(task)) + " " + to_string(focus);
      check.report(worst <= 1e-8, "conservation " + cell, "rel=" + fmt(worst));
      check.report(worst_neuron <= 1e-10, "neuron-partition " + cell,
                   "rel=" + fmt(worst_neuron));
    }
  }

  // Completeness: the Riemann sum closes on the true QoI gap as the sample
  // count grows.
  for (const TaskKind task : {TaskKind::Simple, TaskKind::NounPP}) {
    const auto data = sentence_set(task);
    const TaskInstance& inst = data.front();
    double err[2];
    const int ks[2] = {10, 500};
    for (int i = 0; i < 2; ++i) {
      const InfluenceContext ctx =
          make_influence_context(m, lex, inst, Focus::Subject, ks[i]);
      const TotalInfluence total = total_influence(m, ctx);
      err[i] = std::abs(total.attribution - (total.q_end - total.q_neutral));
    }
    check.report(err[1] <= std::max(err[0], 1e-12),
                 std::string("completeness ") + to_string(task),
                 "err(k=10)=" + fmt(err[0]) + " err(k=500)=" + fmt(err[1]));
  }

  // Finite differences against the full reverse-mode input gradient at the
  // interpolation endpoint (the actual sentence).
  {
    const auto data = sentence_set(TaskKind::NounPP);
    const TaskInstance& inst = data.front();
    const InfluenceContext ctx =
        make_influence_context(m, lex, inst, Focus::Subject, /*k_steps=*/3);
    const ActivationTrace trace = forward(m, ctx.sample_inputs.back(), false);
    const Eigen::VectorXd grad = input_gradient(
        m, trace, ctx.qoi.read_time, ctx.qoi.decoder_row(m), ctx.doi.t_focus);
    const double h = 1e-5;
    double worst = 0.0;
    std::mt19937_64 rng(opts.seed ^ 0xfdfd);
    for (int probe = 0; probe < 5; ++probe) {
      const int d = static_cast<int>(rng() % static_cast<std::uint64_t>(m.embedding_dim));
      auto plus = ctx.sample_inputs.back();
      auto minus = ctx.sample_inputs.back();
      plus[static_cast<size_t>(ctx.doi.t_focus)](d) += h;
      minus[static_cast<size_t>(ctx.doi.t_focus)](d) -= h;
      const double fd =
          (evaluate_qoi(m, plus, ctx.qoi) - evaluate_qoi(m, minus, ctx.qoi)) / (2.0 * h);
      worst = std::max(worst, rel_err(grad(d), fd));
    }
    check.report(worst <= 1e-5, "input-gradient finite differences", "rel=" + fmt(worst));
  }

  // Finite differences for the training gradients on a short sentence.
  {
    const auto data = sentence_set(TaskKind::Simple);
    std::vector<TokenId> inputs = {lex.bos};
    inputs.insert(inputs.end(), data.front().tokens.begin(), data.front().tokens.end());
    std::vector<TokenId> targets(data.front().tokens.begin(), data.front().tokens.end());
    targets.push_back(lex.eos);

    ModelGrads grads = ModelGrads::zeros_like(m);
    bptt_grads(m, inputs, targets, grads);

    LstmModel probe_model = m;
    const double h = 1e-5;
    double worst = 0.0;
    std::mt19937_64 rng(opts.seed ^ 0xabab);
    auto loss_at = [&]() {
      ModelGrads scratch = ModelGrads::zeros_like(probe_model);
      return bptt_grads(probe_model, inputs, targets, scratch);
    };
    for (int probe = 0; probe < 4; ++probe) {
      const int gate = static_cast<int>(rng() % kNumGates);
      const int l = static_cast<int>(rng() % 2);
      Eigen::MatrixXd& w = probe_model.layer[l].u[gate];
      const int r = static_cast<int>(rng() % static_cast<std::uint64_t>(w.rows()));
      const int c = static_cast<int>(rng() % static_cast<std::uint64_t>(w.cols()));
      const double keep = w(r, c);
      w(r, c) = keep + h;
      const double up = loss_at();
      w(r, c) = keep - h;
      const double down = loss_at();
      w(r, c) = keep;
      worst = std::max(worst, rel_err(grads.layer[l].u[gate](r, c), (up - down) / (2.0 * h)));
    }
    check.report(worst <= 1e-5, "training-gradient finite differences", "rel=" + fmt(worst));
  }

  // Metric identities on a fixed miniature table.
  {
    AttributionTable t;
    t.rows = {{3.0, 1.0, -2.0, 0.5}, {2.0, 2.0, -1.0, 0.5}};
    double pos_sum = 0.0;
    for (int p : {0, 1, 3}) pos_sum += share(t, p).share;
    const bool shares_ok = std::abs(pos_sum - 1.0) <= 1e-12;
    check.report(shares_ok, "share partition", "sum=" + fmt(pos_sum));
    // Row 2 ties paths 0 and 1; the tie must count against the target.
    const bool tie_ok = t_value_exact(t, 0) == 5.0 / 6.0;
    check.report(tie_ok, "t-value tie handling", "");
  }

  // Checkpoint round trip through a scratch file.
  {
    const std::string path =
        (std::filesystem::temp_directory_path() / "ipaths_verify_ckpt.json").string();
    save_checkpoint(m, path, FileMeta{});
    const LstmModel back = load_checkpoint(path);
    std::filesystem::remove(path);
    bool same = back.embedding == m.embedding && back.decoder_w == m.decoder_w &&
                back.decoder_b == m.decoder_b && back.vocab == m.vocab;
    for (int l = 0; l < 2 && same; ++l)
      for (int gate = 0; gate < kNumGates && same; ++gate)
        same = back.layer[l].w[gate] == m.layer[l].w[gate] &&
               back.layer[l].u[gate] == m.layer[l].u[gate] &&
               back.layer[l].b[gate] == m.layer[l].b[gate];
    check.report(same, "checkpoint round trip", same ? "bit-exact" : "mismatch");
  }

  return check.failures;
}

}  // namespace ipaths
