#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipaths/lexicon.hpp"
#include "ipaths/model.hpp"

namespace ipaths {

struct TrainParams {
  int embedding_dim = 32;
  int hidden_size = 64;
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 7;
  // Held-out NA gate: stop as soon as Simple >= simple_gate on both
  // conditions and NounPP >= nounpp_gate on all four.
  int dev_count = 200;
  double simple_gate = 0.90;
  double nounpp_gate = 0.80;
  int gate_check_interval = 400;  // batches between mid-epoch gate checks
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using LogSink = std::function<void(const std::string&)>;

// Trains until the NA gate is met or epochs run out; throws TrainingError on
// divergence or an unmet gate. Deterministic for a fixed seed.
LstmModel train(const Lexicon& lex, const std::vector<std::vector<TokenId>>& corpus,
                const TrainParams& params, const LogSink& log = {});

}  // namespace ipaths
