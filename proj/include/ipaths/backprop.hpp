#pragma once

#include <Eigen/Dense>
#include <span>

#include "ipaths/model.hpp"

namespace ipaths {

struct ModelGrads {
  Eigen::MatrixXd embedding;
  std::array<LstmLayerParams, 2> layer;
  Eigen::MatrixXd decoder_w;
  Eigen::VectorXd decoder_b;

  static ModelGrads zeros_like(const LstmModel& m);
  void add_scaled(const ModelGrads& other, double scale);
};

// Next-token cross-entropy over the whole sequence (inputs [BOS, w0..wn],
// targets [w0..wn, EOS]). Returns mean loss per predicted token and
// accumulates parameter gradients of the *sum* divided by target count.
double bptt_grads(const LstmModel& m, std::span<const TokenId> inputs,
                  std::span<const TokenId> targets, ModelGrads& grads);

// Reverse-mode gradient of a scalar q = qoi_row . h^{L-1}_{read_time} with
// respect to the input embedding at focus_time. This is the total-gradient
// route: it runs through the full recurrence, not the path graph.
Eigen::VectorXd input_gradient(const LstmModel& m, const ActivationTrace& trace,
                               int read_time, const Eigen::RowVectorXd& qoi_row,
                               int focus_time);

}  // namespace ipaths
