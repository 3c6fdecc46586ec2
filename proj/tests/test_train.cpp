#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "ipaths/backprop.hpp"
#include "ipaths/corpus.hpp"
#include "ipaths/train.hpp"

using namespace ipaths;

namespace {

double loss_only(const LstmModel& m, std::span<const TokenId> inputs,
                 std::span<const TokenId> targets) {
  ModelGrads scratch = ModelGrads::zeros_like(m);
  return bptt_grads(m, inputs, targets, scratch);
}

void make_sequences(const Lexicon& lex, const std::vector<TokenId>& sent,
                    std::vector<TokenId>& inputs, std::vector<TokenId>& targets) {
  inputs.clear();
  targets.clear();
  inputs.push_back(lex.bos);
  inputs.insert(inputs.end(), sent.begin(), sent.end());
  targets.insert(targets.end(), sent.begin(), sent.end());
  targets.push_back(lex.eos);
}

bool close(double fd, double an) {
  const double d = std::abs(fd - an);
  return d <= 1e-5 * std::max(std::abs(fd), std::abs(an)) || d <= 1e-8;
}

}  // namespace

TEST_CASE("sequence-loss gradients match central finite differences") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  LstmModel m = init_model(lex.size(), 6, 8, 51, lex.vocab());
  const auto corpus = generate_training_corpus(lex, 3, 9);

  std::vector<TokenId> inputs, targets;
  make_sequences(lex, corpus[0], inputs, targets);

  ModelGrads grads = ModelGrads::zeros_like(m);
  const double loss = bptt_grads(m, inputs, targets, grads);
  CHECK(std::isfinite(loss));
  CHECK(loss > 0.0);

  // Probe a spread of coordinates in every parameter family.
  struct Probe {
    double* param;
    const double* grad;
    const char* what;
  };
  std::vector<Probe> probes;
  auto add = [&](Eigen::MatrixXd& p, Eigen::MatrixXd& g, const char* what) {
    std::mt19937_64 rng(std::hash<std::string>{}(what));
    std::uniform_int_distribution<Eigen::Index> d(0, p.size() - 1);
    for (int k = 0; k < 4; ++k) {
      const Eigen::Index i = d(rng);
      probes.push_back({p.data() + i, g.data() + i, what});
    }
  };
  add(m.embedding, grads.embedding, "embedding");
  for (int l = 0; l < 2; ++l)
    for (int gate = 0; gate < kNumGates; ++gate) {
      add(m.layer[l].w[gate], grads.layer[l].w[gate], "w");
      add(m.layer[l].u[gate], grads.layer[l].u[gate], "u");
    }
  add(m.decoder_w, grads.decoder_w, "decoder");

  const double h = 1e-5;
  for (const Probe& probe : probes) {
    const double saved = *probe.param;
    *probe.param = saved + h;
    const double lp = loss_only(m, inputs, targets);
    *probe.param = saved - h;
    const double lm = loss_only(m, inputs, targets);
    *probe.param = saved;
    const double fd = (lp - lm) / (2.0 * h);
    INFO("family ", probe.what, " fd=", fd, " an=", *probe.grad);
    CHECK(close(fd, *probe.grad));
  }

  // Bias gradients, via the vector blocks.
  for (int l = 0; l < 2; ++l) {
    double* p = m.layer[l].b[kGateF].data() + 3;
    const double saved = *p;
    *p = saved + h;
    const double lp = loss_only(m, inputs, targets);
    *p = saved - h;
    const double lm = loss_only(m, inputs, targets);
    *p = saved;
    CHECK(close((lp - lm) / (2.0 * h), grads.layer[l].b[kGateF](3)));
  }
}

TEST_CASE("end-to-end scalar gradient at one input matches finite differences") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  const LstmModel m = init_model(lex.size(), 6, 8, 52, lex.vocab());
  const auto data = generate_task_dataset(lex, TaskKind::NounPP, Condition::SP, 1, 7);
  const TaskInstance& inst = data[0];

  auto inputs = embed_with_bos(m, lex.bos, inst.tokens);
  const ActivationTrace trace = forward(m, inputs, false);
  Eigen::RowVectorXd qoi_row =
      m.decoder_w.row(inst.verb_correct) - m.decoder_w.row(inst.verb_wrong);
  const int read = score_time(inst.t_verb);
  const int focus = inst.t_sub + 1;  // trace time where the subject enters

  const Eigen::VectorXd grad = input_gradient(m, trace, read, qoi_row, focus);
  REQUIRE(grad.size() == m.embedding_dim);

  auto q_of = [&](const std::vector<Eigen::VectorXd>& in) {
    const auto tr = forward(m, in, false);
    return qoi_row.dot(tr.steps[static_cast<size_t>(read)][1].h);
  };
  const double h = 1e-6;
  for (int i = 0; i < m.embedding_dim; ++i) {
    auto in = inputs;
    in[static_cast<size_t>(focus)](i) += h;
    const double qp = q_of(in);
    in[static_cast<size_t>(focus)](i) -= 2.0 * h;
    const double qm = q_of(in);
    CHECK(close((qp - qm) / (2.0 * h), grad(i)));
  }

  // The step feeding the read-off still matters and its gradient is exact...
  const Eigen::VectorXd grad_at_read = input_gradient(m, trace, read, qoi_row, read);
  {
    auto in = inputs;
    in[static_cast<size_t>(read)](2) += h;
    const double qp = q_of(in);
    in[static_cast<size_t>(read)](2) -= 2.0 * h;
    const double qm = q_of(in);
    CHECK(close((qp - qm) / (2.0 * h), grad_at_read(2)));
  }
  // ...while the verb token itself, consumed one step later, cannot reach
  // back into its own score.
  {
    auto in = inputs;
    in[static_cast<size_t>(read) + 1](0) += 0.5;
    CHECK(q_of(in) == doctest::Approx(q_of(inputs)).epsilon(1e-12));
  }
}

TEST_CASE("a short training run reduces language-model loss deterministically") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  const auto corpus = generate_training_corpus(lex, 2000, 3);

  TrainParams tp;
  tp.embedding_dim = 10;
  tp.hidden_size = 12;
  tp.epochs = 3;
  tp.batch_size = 16;
  tp.learning_rate = 3e-3;
  tp.seed = 5;
  tp.dev_count = 40;
  tp.simple_gate = 0.0;  // let the epoch budget decide
  tp.nounpp_gate = 0.0;

  std::vector<std::string> lines;
  const LstmModel trained =
      train(lex, corpus, tp, [&](const std::string& s) { lines.push_back(s); });
  CHECK(!lines.empty());

  const LstmModel fresh = init_model(lex.size(), 10, 12, tp.seed, lex.vocab());
  double before = 0.0, after = 0.0;
  std::vector<TokenId> inputs, targets;
  for (int i = 0; i < 50; ++i) {
    make_sequences(lex, corpus[static_cast<size_t>(i)], inputs, targets);
    before += loss_only(fresh, inputs, targets);
    after += loss_only(trained, inputs, targets);
  }
  CHECK(after < 0.85 * before);

  // Same seed, same corpus: bitwise identical result.
  const LstmModel again = train(lex, corpus, tp, {});
  CHECK((again.embedding - trained.embedding).cwiseAbs().maxCoeff() == 0.0);
  CHECK((again.decoder_w - trained.decoder_w).cwiseAbs().maxCoeff() == 0.0);
  CHECK((again.layer[1].u[kGateG] - trained.layer[1].u[kGateG]).cwiseAbs().maxCoeff() ==
        0.0);

  TrainParams other = tp;
  other.seed = 6;
  const LstmModel different = train(lex, corpus, other, {});
  CHECK((different.embedding - trained.embedding).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("an unreachable accuracy gate is reported as a training failure") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  const auto corpus = generate_training_corpus(lex, 50, 3);
  TrainParams tp;
  tp.embedding_dim = 4;
  tp.hidden_size = 4;
  tp.epochs = 1;
  tp.dev_count = 20;
  tp.simple_gate = 1.01;  // cannot be reached by construction
  CHECK_THROWS_AS(train(lex, corpus, tp, {}), TrainingError);
}
