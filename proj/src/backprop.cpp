#include "ipaths/backprop.hpp"

#include <cmath>
#include <stdexcept>

namespace ipaths {

ModelGrads ModelGrads::zeros_like(const LstmModel& m) {
  ModelGrads g;
  g.embedding = Eigen::MatrixXd::Zero(m.embedding.rows(), m.embedding.cols());
  for (int l = 0; l < m.num_layers; ++l)
    for (int gate = 0; gate < kNumGates; ++gate) {
      g.layer[l].w[gate] =
          Eigen::MatrixXd::Zero(m.layer[l].w[gate].rows(), m.layer[l].w[gate].cols());
      g.layer[l].u[gate] =
          Eigen::MatrixXd::Zero(m.layer[l].u[gate].rows(), m.layer[l].u[gate].cols());
      g.layer[l].b[gate] = Eigen::VectorXd::Zero(m.layer[l].b[gate].size());
    }
  g.decoder_w = Eigen::MatrixXd::Zero(m.decoder_w.rows(), m.decoder_w.cols());
  g.decoder_b = Eigen::VectorXd::Zero(m.decoder_b.size());
  return g;
}

void ModelGrads::add_scaled(const ModelGrads& other, double scale) {
  embedding += scale * other.embedding;
  for (int l = 0; l < 2; ++l)
    for (int gate = 0; gate < kNumGates; ++gate) {
      layer[l].w[gate] += scale * other.layer[l].w[gate];
      layer[l].u[gate] += scale * other.layer[l].u[gate];
      layer[l].b[gate] += scale * other.layer[l].b[gate];
    }
  decoder_w += scale * other.decoder_w;
  decoder_b += scale * other.decoder_b;
}

namespace {

struct StepBack {
  // Gradients flowing into a timestep's hidden/cell state, per layer.
  std::array<Eigen::VectorXd, 2> dh, dc;
};

// Shared backward step through one (t, l) cell. Consumes dh/dc at (t, l),
// emits gradients for h_{t-1}, c_{t-1}, and the layer input; optionally
// accumulates parameter gradients.
void backward_cell(const LstmModel& m, const ActivationTrace& trace, int t, int l,
                   const Eigen::VectorXd& dh, const Eigen::VectorXd& dc_in,
                   Eigen::VectorXd& dh_prev, Eigen::VectorXd& dc_prev,
                   Eigen::VectorXd& dx, ModelGrads* grads) {
  const LayerStep& s = trace.steps[static_cast<size_t>(t)][static_cast<size_t>(l)];
  const Eigen::VectorXd tanh_c = s.c.array().tanh();

  Eigen::VectorXd dc = dc_in;
  dc.array() += dh.array() * s.act[kGateO].array() * (1.0 - tanh_c.array().square());

  const Eigen::VectorXd c_prev =
      t == 0 ? Eigen::VectorXd::Zero(m.hidden_size).eval()
             : trace.steps[static_cast<size_t>(t - 1)][static_cast<size_t>(l)].c;

  std::array<Eigen::VectorXd, kNumGates> dpre;
  {
    const auto& f = s.act[kGateF].array();
    const auto& i = s.act[kGateI].array();
    const auto& o = s.act[kGateO].array();
    const auto& g = s.act[kGateG].array();
    dpre[kGateO] = (dh.array() * tanh_c.array() * o * (1.0 - o)).matrix();
    dpre[kGateF] = (dc.array() * c_prev.array() * f * (1.0 - f)).matrix();
    dpre[kGateI] = (dc.array() * g * i * (1.0 - i)).matrix();
    dpre[kGateG] = (dc.array() * i * (1.0 - g.square())).matrix();
  }

  dc_prev = dc.cwiseProduct(s.act[kGateF]);

  const Eigen::VectorXd& x =
      l == 0 ? trace.inputs[static_cast<size_t>(t)]
             : trace.steps[static_cast<size_t>(t)][static_cast<size_t>(l - 1)].h;
  const Eigen::VectorXd h_prev_l =
      t == 0 ? Eigen::VectorXd::Zero(m.hidden_size).eval()
             : trace.steps[static_cast<size_t>(t - 1)][static_cast<size_t>(l)].h;

  dx = Eigen::VectorXd::Zero(x.size());
  dh_prev = Eigen::VectorXd::Zero(m.hidden_size);
  for (int gate = 0; gate < kNumGates; ++gate) {
    dx.noalias() += m.layer[l].w[gate].transpose() * dpre[gate];
    dh_prev.noalias() += m.layer[l].u[gate].transpose() * dpre[gate];
    if (grads) {
      grads->layer[l].w[gate].noalias() += dpre[gate] * x.transpose();
      grads->layer[l].u[gate].noalias() += dpre[gate] * h_prev_l.transpose();
      grads->layer[l].b[gate] += dpre[gate];
    }
  }
}

}  // namespace

double bptt_grads(const LstmModel& m, std::span<const TokenId> inputs,
                  std::span<const TokenId> targets, ModelGrads& grads) {
  if (inputs.size() != targets.size() || inputs.empty())
    throw std::invalid_argument("bptt needs equal non-empty input/target sequences");
  const int T = static_cast<int>(inputs.size());
  const double inv_n = 1.0 / static_cast<double>(T);

  std::vector<Eigen::VectorXd> xs;
  xs.reserve(inputs.size());
  for (TokenId t : inputs) xs.push_back(m.embedding.row(t).transpose());
  const ActivationTrace trace = forward(m, xs);

  // Softmax losses and the seed gradients for every step.
  double loss = 0.0;
  std::vector<Eigen::VectorXd> dh_top(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd& logits = trace.logits[static_cast<size_t>(t)];
    const double mx = logits.maxCoeff();
    const Eigen::VectorXd ex = (logits.array() - mx).exp();
    const double z = ex.sum();
    loss += -(logits(targets[static_cast<size_t>(t)]) - mx - std::log(z));

    Eigen::VectorXd dlogits = ex / z;
    dlogits(targets[static_cast<size_t>(t)]) -= 1.0;
    dlogits *= inv_n;
    grads.decoder_w.noalias() +=
        dlogits * trace.steps[static_cast<size_t>(t)][1].h.transpose();
    grads.decoder_b += dlogits;
    dh_top[static_cast<size_t>(t)] = m.decoder_w.transpose() * dlogits;
  }

  StepBack back;
  for (int l = 0; l < 2; ++l) {
    back.dh[l] = Eigen::VectorXd::Zero(m.hidden_size);
    back.dc[l] = Eigen::VectorXd::Zero(m.hidden_size);
  }
  for (int t = T - 1; t >= 0; --t) {
    back.dh[1] += dh_top[static_cast<size_t>(t)];
    Eigen::VectorXd dh_prev, dc_prev, dx;
    backward_cell(m, trace, t, 1, back.dh[1], back.dc[1], dh_prev, dc_prev, dx, &grads);
    back.dh[1] = dh_prev;
    back.dc[1] = dc_prev;
    back.dh[0] += dx;

    backward_cell(m, trace, t, 0, back.dh[0], back.dc[0], dh_prev, dc_prev, dx, &grads);
    back.dh[0] = dh_prev;
    back.dc[0] = dc_prev;
    grads.embedding.row(inputs[static_cast<size_t>(t)]) += dx.transpose();
  }
  return loss * inv_n;
}

Eigen::VectorXd input_gradient(const LstmModel& m, const ActivationTrace& trace,
                               int read_time, const Eigen::RowVectorXd& qoi_row,
                               int focus_time) {
  if (read_time < focus_time || read_time >= trace.length())
    throw std::invalid_argument("input_gradient needs focus_time <= read_time < T");

  StepBack back;
  for (int l = 0; l < 2; ++l) {
    back.dh[l] = Eigen::VectorXd::Zero(m.hidden_size);
    back.dc[l] = Eigen::VectorXd::Zero(m.hidden_size);
  }
  back.dh[1] = qoi_row.transpose();

  Eigen::VectorXd result;
  for (int t = read_time; t >= focus_time; --t) {
    Eigen::VectorXd dh_prev, dc_prev, dx;
    backward_cell(m, trace, t, 1, back.dh[1], back.dc[1], dh_prev, dc_prev, dx, nullptr);
    back.dh[1] = dh_prev;
    back.dc[1] = dc_prev;
    back.dh[0] += dx;

    backward_cell(m, trace, t, 0, back.dh[0], back.dc[0], dh_prev, dc_prev, dx, nullptr);
    back.dh[0] = dh_prev;
    back.dc[0] = dc_prev;
    if (t == focus_time) result = dx;
  }
  if (!result.allFinite()) throw std::runtime_error("non-finite input gradient");
  return result;
}

}  // namespace ipaths
