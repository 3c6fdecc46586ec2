#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ipaths/types.hpp"

namespace ipaths {

// Gate index convention used throughout: f, i, o, g where g is the tanh
// candidate cell.
enum Gate : int { kGateF = 0, kGateI = 1, kGateO = 2, kGateG = 3 };
inline constexpr int kNumGates = 4;
const char* gate_name(int gate);

struct LstmLayerParams {
  std::array<Eigen::MatrixXd, kNumGates> w;  // H x input_dim
  std::array<Eigen::MatrixXd, kNumGates> u;  // H x H
  std::array<Eigen::VectorXd, kNumGates> b;  // H
};

// 2-layer LSTM language model over the closed vocabulary. Immutable after
// training or loading; all analysis code treats it as read-only.
struct LstmModel {
  int embedding_dim = 32;
  int hidden_size = 64;
  int num_layers = 2;
  int vocab_size = 0;

  Eigen::MatrixXd embedding;  // V x d, one row per token
  std::array<LstmLayerParams, 2> layer;
  Eigen::MatrixXd decoder_w;  // V x H
  Eigen::VectorXd decoder_b;  // V

  std::vector<std::string> vocab;

  int layer_input_dim(int l) const { return l == 0 ? embedding_dim : hidden_size; }
};

struct LayerStep {
  std::array<Eigen::VectorXd, kNumGates> pre;  // pre-activations
  std::array<Eigen::VectorXd, kNumGates> act;  // f,i,o in (0,1); g in (-1,1)
  Eigen::VectorXd c;
  Eigen::VectorXd h;
};

// Full forward recording for one input sequence. Time t holds the state
// after consuming inputs[t]; logits[t] scores the next position.
struct ActivationTrace {
  std::vector<Eigen::VectorXd> inputs;              // T x d
  std::vector<std::array<LayerStep, 2>> steps;      // T x L
  std::vector<Eigen::VectorXd> logits;              // T x V (empty when skipped)
  int length() const { return static_cast<int>(steps.size()); }
};

LstmModel init_model(int vocab_size, int embedding_dim, int hidden_size,
                     std::uint64_t seed, std::vector<std::string> vocab = {});

// Embeds [BOS, tokens...]; the caller owns any further edits (the influence
// sampler replaces a single position).
std::vector<Eigen::VectorXd> embed_with_bos(const LstmModel& m, TokenId bos,
                                            std::span<const TokenId> tokens);

// Initial hidden and cell states are zero. Throws on dimension mismatch.
ActivationTrace forward(const LstmModel& m, std::span<const Eigen::VectorXd> inputs,
                        bool want_logits = true);

// Logit row scoring sentence position `pos` (0-based, BOS excluded), i.e.
// trace time `pos` of a BOS-prefixed run.
inline int score_time(int pos) { return pos; }

// Fraction of instances whose correct verb form strictly outscores the wrong
// one; ties count as incorrect.
double na_accuracy(const LstmModel& m, TokenId bos, std::span<const TaskInstance> data);

// Checkpoint I/O. Value-exact round trip: save then load reproduces every
// parameter bit for bit.
void save_checkpoint(const LstmModel& m, const std::string& path, const FileMeta& meta);
LstmModel load_checkpoint(const std::string& path);

}  // namespace ipaths
