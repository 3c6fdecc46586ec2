#include "ipaths/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ipaths/backprop.hpp"
#include "ipaths/corpus.hpp"

namespace ipaths {

namespace {

// Flat views over every trainable array, in one fixed order shared by the
// model and its gradient/optimizer buffers.
std::vector<std::pair<double*, Eigen::Index>> param_blocks(LstmModel& m) {
  std::vector<std::pair<double*, Eigen::Index>> out;
  out.emplace_back(m.embedding.data(), m.embedding.size());
  for (int l = 0; l < m.num_layers; ++l)
    for (int gate = 0; gate < kNumGates; ++gate) {
      out.emplace_back(m.layer[l].w[gate].data(), m.layer[l].w[gate].size());
      out.emplace_back(m.layer[l].u[gate].data(), m.layer[l].u[gate].size());
      out.emplace_back(m.layer[l].b[gate].data(), m.layer[l].b[gate].size());
    }
  out.emplace_back(m.decoder_w.data(), m.decoder_w.size());
  out.emplace_back(m.decoder_b.data(), m.decoder_b.size());
  return out;
}

std::vector<std::pair<double*, Eigen::Index>> grad_blocks(ModelGrads& g) {
  std::vector<std::pair<double*, Eigen::Index>> out;
  out.emplace_back(g.embedding.data(), g.embedding.size());
  for (int l = 0; l < 2; ++l)
    for (int gate = 0; gate < kNumGates; ++gate) {
      out.emplace_back(g.layer[l].w[gate].data(), g.layer[l].w[gate].size());
      out.emplace_back(g.layer[l].u[gate].data(), g.layer[l].u[gate].size());
      out.emplace_back(g.layer[l].b[gate].data(), g.layer[l].b[gate].size());
    }
  out.emplace_back(g.decoder_w.data(), g.decoder_w.size());
  out.emplace_back(g.decoder_b.data(), g.decoder_b.size());
  return out;
}

struct DevSets {
  std::vector<TaskInstance> simple_s, simple_p;
  std::vector<TaskInstance> nounpp[4];
};

struct GateStatus {
  double simple_min = 0.0;
  double nounpp_min = 0.0;
  bool met(const TrainParams& p) const {
    return simple_min >= p.simple_gate && nounpp_min >= p.nounpp_gate;
  }
};

GateStatus eval_gate(const LstmModel& m, TokenId bos, const DevSets& dev) {
  GateStatus g;
  g.simple_min = std::min(na_accuracy(m, bos, dev.simple_s),
                          na_accuracy(m, bos, dev.simple_p));
  g.nounpp_min = 1.0;
  for (const auto& d : dev.nounpp)
    g.nounpp_min = std::min(g.nounpp_min, na_accuracy(m, bos, d));
  return g;
}

}  // namespace

LstmModel train(const Lexicon& lex, const std::vector<std::vector<TokenId>>& corpus,
                const TrainParams& params, const LogSink& log) {
  if (corpus.empty()) throw TrainingError("empty training corpus");
  auto say = [&](const std::string& line) {
    if (log) log(line);
  };

  LstmModel m = init_model(lex.size(), params.embedding_dim, params.hidden_size,
                           params.seed, lex.vocab());

  // Held-out probes; seeds are offset so they never overlap a caller's
  // evaluation datasets generated from small seeds.
  DevSets dev;
  const std::uint64_t ds = params.seed * 7919 + 1000003;
  dev.simple_s = generate_task_dataset(lex, TaskKind::Simple, Condition::S,
                                       params.dev_count, ds + 1);
  dev.simple_p = generate_task_dataset(lex, TaskKind::Simple, Condition::P,
                                       params.dev_count, ds + 2);
  {
    int i = 0;
    for (Condition c : conditions_for(TaskKind::NounPP))
      dev.nounpp[i++] = generate_task_dataset(lex, TaskKind::NounPP, c,
                                              params.dev_count, ds + 3 + i);
  }

  ModelGrads batch_grads = ModelGrads::zeros_like(m);
  ModelGrads adam_m = ModelGrads::zeros_like(m);
  ModelGrads adam_v = ModelGrads::zeros_like(m);
  auto mp = param_blocks(m);
  auto gp = grad_blocks(batch_grads);
  auto m1 = grad_blocks(adam_m);
  auto m2 = grad_blocks(adam_v);

  std::mt19937_64 order_rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  long step = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    long epoch_sentences = 0;
    int batches_since_check = 0;

    for (size_t start = 0; start < order.size(); start += params.batch_size) {
      const size_t end = std::min(order.size(), start + params.batch_size);
      for (auto& [ptr, n] : gp) std::fill(ptr, ptr + n, 0.0);

      for (size_t k = start; k < end; ++k) {
        const auto& sent = corpus[order[k]];
        std::vector<TokenId> inputs, targets;
        inputs.reserve(sent.size() + 1);
        targets.reserve(sent.size() + 1);
        inputs.push_back(lex.bos);
        inputs.insert(inputs.end(), sent.begin(), sent.end());
        targets.insert(targets.end(), sent.begin(), sent.end());
        targets.push_back(lex.eos);
        const double loss = bptt_grads(m, inputs, targets, batch_grads);
        if (!std::isfinite(loss)) throw TrainingError("training diverged (loss)");
        epoch_loss += loss;
        ++epoch_sentences;
      }

      const double inv_b = 1.0 / static_cast<double>(end - start);
      double norm_sq = 0.0;
      for (auto& [ptr, n] : gp)
        for (Eigen::Index i = 0; i < n; ++i) {
          ptr[i] *= inv_b;
          norm_sq += ptr[i] * ptr[i];
        }
      // Clip the global norm; rare spikes otherwise derail small models.
      const double clip = 5.0;
      const double norm = std::sqrt(norm_sq);
      const double scale = norm > clip ? clip / norm : 1.0;

      ++step;
      const double bc1 = 1.0 - std::pow(params.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(params.adam_beta2, static_cast<double>(step));
      for (size_t blk = 0; blk < gp.size(); ++blk) {
        double* g = gp[blk].first;
        double* mo = m1[blk].first;
        double* vo = m2[blk].first;
        double* p = mp[blk].first;
        const Eigen::Index n = gp[blk].second;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double gi = g[i] * scale;
          mo[i] = params.adam_beta1 * mo[i] + (1.0 - params.adam_beta1) * gi;
          vo[i] = params.adam_beta2 * vo[i] + (1.0 - params.adam_beta2) * gi * gi;
          p[i] -= params.learning_rate * (mo[i] / bc1) /
                  (std::sqrt(vo[i] / bc2) + params.adam_eps);
        }
      }

      if (++batches_since_check >= params.gate_check_interval) {
        batches_since_check = 0;
        const GateStatus gs = eval_gate(m, lex.bos, dev);
        say("epoch " + std::to_string(epoch) + " step " + std::to_string(step) +
            " loss " + std::to_string(epoch_loss / std::max(1L, epoch_sentences)) +
            " dev simple " + std::to_string(gs.simple_min) + " nounpp " +
            std::to_string(gs.nounpp_min));
        if (gs.met(params)) {
          say("dev gate met, stopping early");
          return m;
        }
      }
    }

    const GateStatus gs = eval_gate(m, lex.bos, dev);
    say("epoch " + std::to_string(epoch) + " done, mean loss " +
        std::to_string(epoch_loss / std::max(1L, epoch_sentences)) + ", dev simple " +
        std::to_string(gs.simple_min) + " nounpp " + std::to_string(gs.nounpp_min));
    if (gs.met(params)) {
      say("dev gate met, stopping");
      return m;
    }
  }
  throw TrainingError("dev gate not met within the epoch budget");
}

}  // namespace ipaths
