#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "doctest.h"
#include "ipaths/corpus.hpp"
#include "ipaths/model.hpp"

using namespace ipaths;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Reference forward pass written against plain nested vectors, sharing no
// linear-algebra code with the implementation under test.
struct RefState {
  std::vector<std::vector<double>> h, c;  // [layer][unit]
};

double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::vector<double>> ref_forward_hidden(const LstmModel& m,
                                                    const std::vector<std::vector<double>>& xs) {
  const int H = m.hidden_size;
  RefState st;
  st.h.assign(2, std::vector<double>(H, 0.0));
  st.c.assign(2, std::vector<double>(H, 0.0));

  std::vector<std::vector<double>> top_h;
  for (const auto& x : xs) {
    std::vector<double> input = x;
    for (int l = 0; l < 2; ++l) {
      std::vector<std::vector<double>> pre(kNumGates, std::vector<double>(H, 0.0));
      for (int gate = 0; gate < kNumGates; ++gate)
        for (int u = 0; u < H; ++u) {
          double acc = m.layer[l].b[gate](u);
          for (size_t j = 0; j < input.size(); ++j)
            acc += m.layer[l].w[gate](u, static_cast<int>(j)) * input[j];
          for (int j = 0; j < H; ++j)
            acc += m.layer[l].u[gate](u, j) * st.h[l][j];
          pre[gate][u] = acc;
        }
      std::vector<double> new_c(H), new_h(H);
      for (int u = 0; u < H; ++u) {
        const double f = ref_sigmoid(pre[kGateF][u]);
        const double i = ref_sigmoid(pre[kGateI][u]);
        const double o = ref_sigmoid(pre[kGateO][u]);
        const double g = std::tanh(pre[kGateG][u]);
        new_c[u] = f * st.c[l][u] + i * g;
        new_h[u] = o * std::tanh(new_c[u]);
      }
      st.c[l] = new_c;
      st.h[l] = new_h;
      input = new_h;
    }
    top_h.push_back(st.h[1]);
  }
  return top_h;
}

LstmModel small_model(std::uint64_t seed) {
  return init_model(/*vocab_size=*/9, /*embedding_dim=*/3, /*hidden_size=*/5, seed,
                    {"a", "b", "c", "d", "e", "f", "g", "h", "i"});
}

}  // namespace

TEST_CASE("forward matches a straight-line reference implementation") {
  const LstmModel m = small_model(21);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> tok(0, 8);

  for (int trial = 0; trial < 5; ++trial) {
    std::vector<TokenId> toks;
    for (int t = 0; t < 6; ++t) toks.push_back(tok(rng));
    const auto inputs = embed_with_bos(m, /*bos=*/0, toks);
    const ActivationTrace trace = forward(m, inputs);

    std::vector<std::vector<double>> xs;
    for (const auto& x : inputs)
      xs.emplace_back(x.data(), x.data() + x.size());
    const auto ref_h = ref_forward_hidden(m, xs);

    REQUIRE(trace.length() == static_cast<int>(xs.size()));
    for (int t = 0; t < trace.length(); ++t) {
      for (int u = 0; u < m.hidden_size; ++u)
        CHECK(trace.steps[t][1].h(u) == doctest::Approx(ref_h[t][u]).epsilon(1e-12));
      // Logits are an affine read-out of the top hidden state.
      for (int v = 0; v < m.vocab_size; ++v) {
        double acc = m.decoder_b(v);
        for (int u = 0; u < m.hidden_size; ++u)
          acc += m.decoder_w(v, u) * ref_h[t][u];
        CHECK(trace.logits[t](v) == doctest::Approx(acc).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("trace records gates consistent with the state recurrence") {
  const LstmModel m = small_model(22);
  const std::vector<TokenId> toks = {3, 1, 4, 1, 5};
  const auto inputs = embed_with_bos(m, 0, toks);
  const ActivationTrace trace = forward(m, inputs, /*want_logits=*/false);
  CHECK(trace.logits.empty());

  for (int t = 0; t < trace.length(); ++t) {
    for (int l = 0; l < 2; ++l) {
      const LayerStep& s = trace.steps[t][l];
      const Eigen::VectorXd c_prev =
          t == 0 ? Eigen::VectorXd::Zero(m.hidden_size).eval() : trace.steps[t - 1][l].c;
      const Eigen::VectorXd c_expect =
          s.act[kGateF].cwiseProduct(c_prev) + s.act[kGateI].cwiseProduct(s.act[kGateG]);
      CHECK((s.c - c_expect).cwiseAbs().maxCoeff() == 0.0);
      const Eigen::VectorXd h_expect =
          s.act[kGateO].cwiseProduct(s.c.array().tanh().matrix());
      CHECK((s.h - h_expect).cwiseAbs().maxCoeff() == 0.0);
      for (int gate : {kGateF, kGateI, kGateO}) {
        CHECK(s.act[gate].minCoeff() > 0.0);
        CHECK(s.act[gate].maxCoeff() < 1.0);
      }
      CHECK(s.act[kGateG].cwiseAbs().maxCoeff() < 1.0);
    }
  }
}

TEST_CASE("scoring time is the step before the scored position is consumed") {
  // With the begin marker at trace time 0, position p is consumed at trace
  // time p + 1, so its score must come from trace time p.
  CHECK(score_time(0) == 0);
  CHECK(score_time(4) == 4);

  const LstmModel m = small_model(23);
  const std::vector<TokenId> toks = {2, 7, 5};
  const auto inputs = embed_with_bos(m, 0, toks);
  const ActivationTrace trace = forward(m, inputs);

  // Changing a later token must not affect the score for an earlier slot.
  std::vector<TokenId> toks2 = toks;
  toks2[2] = 8;
  const auto trace2 = forward(m, embed_with_bos(m, 0, toks2));
  CHECK((trace.logits[score_time(2)] - trace2.logits[score_time(2)])
            .cwiseAbs().maxCoeff() == 0.0);
  // But it does affect the next slot's score.
  CHECK((trace.logits[score_time(3)] - trace2.logits[score_time(3)])
            .cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("agreement accuracy counts strict wins only") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  LstmModel m = init_model(lex.size(), 8, 6, 31, lex.vocab());
  const auto data = generate_task_dataset(lex, TaskKind::Simple, Condition::S, 40, 5);

  // Direct recomputation from logits.
  int wins = 0;
  for (const auto& inst : data) {
    const auto trace = forward(m, embed_with_bos(m, lex.bos, inst.tokens));
    const auto& row = trace.logits[static_cast<size_t>(score_time(inst.t_verb))];
    if (row(inst.verb_correct) > row(inst.verb_wrong)) ++wins;
  }
  CHECK(na_accuracy(m, lex.bos, data) ==
        doctest::Approx(wins / 40.0).epsilon(1e-15));

  // A decoder that cannot tell the forms apart ties every pair; ties lose.
  for (auto [sing, plur] : lex.verb_pairs) {
    m.decoder_w.row(plur) = m.decoder_w.row(sing);
    m.decoder_b(plur) = m.decoder_b(sing);
  }
  CHECK(na_accuracy(m, lex.bos, data) == 0.0);
}

TEST_CASE("checkpoint round trip is exact to the last bit") {
  const Lexicon lex = build_lexicon(LexiconConfig{}, 11);
  LstmModel m = init_model(lex.size(), 32, 64, 77, lex.vocab());
  // Exercise values that stress shortest-round-trip printing.
  m.embedding(0, 0) = 0.1;
  m.embedding(0, 1) = 1.0 / 3.0;
  m.embedding(0, 2) = 1e-300;
  m.decoder_b(5) = -2.5e17;

  const std::string path = temp_path("ipaths_ckpt_rt.json");
  save_checkpoint(m, path, FileMeta{});
  const LstmModel back = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(back.vocab == m.vocab);
  CHECK(back.embedding_dim == m.embedding_dim);
  CHECK(back.hidden_size == m.hidden_size);
  CHECK((back.embedding - m.embedding).cwiseAbs().maxCoeff() == 0.0);
  for (int l = 0; l < 2; ++l)
    for (int gate = 0; gate < kNumGates; ++gate) {
      CHECK((back.layer[l].w[gate] - m.layer[l].w[gate]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((back.layer[l].u[gate] - m.layer[l].u[gate]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((back.layer[l].b[gate] - m.layer[l].b[gate]).cwiseAbs().maxCoeff() == 0.0);
    }
  CHECK((back.decoder_w - m.decoder_w).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.decoder_b - m.decoder_b).cwiseAbs().maxCoeff() == 0.0);
}
