#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "ipaths/lexicon.hpp"
#include "ipaths/model.hpp"

namespace ipaths {

using LineSink = std::function<void(const std::string&)>;

struct VerifyOptions {
  int k_steps = 50;
  int sentences_per_task = 3;
  std::uint64_t seed = 17;
};

// Self-checks against independently computed references: path-count
// bookkeeping, decomposition sums vs direct end-to-end gradients,
// finite-difference probes of the step Jacobians, neuron sums vs their
// parent path, and a checkpoint round trip. Emits one line per check and
// returns the number of failures.
int run_verification(const LstmModel& m, const Lexicon& lex,
                     const VerifyOptions& opts, const LineSink& sink);

}  // namespace ipaths
