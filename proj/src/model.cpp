#include "ipaths/model.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace ipaths {

const char* gate_name(int gate) {
  switch (gate) {
    case kGateF: return "f";
    case kGateI: return "i";
    case kGateO: return "o";
    case kGateG: return "ccand";
  }
  return "?";
}

LstmModel init_model(int vocab_size, int embedding_dim, int hidden_size,
                     std::uint64_t seed, std::vector<std::string> vocab) {
  LstmModel m;
  m.embedding_dim = embedding_dim;
  m.hidden_size = hidden_size;
  m.vocab_size = vocab_size;
  m.vocab = std::move(vocab);

  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> uni(-bound, bound);
  auto fill = [&](Eigen::MatrixXd& mat, int rows, int cols) {
    mat.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) mat(r, c) = uni(rng);
  };

  fill(m.embedding, vocab_size, embedding_dim);
  for (int l = 0; l < m.num_layers; ++l) {
    const int in = m.layer_input_dim(l);
    for (int gate = 0; gate < kNumGates; ++gate) {
      fill(m.layer[l].w[gate], hidden_size, in);
      fill(m.layer[l].u[gate], hidden_size, hidden_size);
      // Forget bias starts open so early training can carry state.
      m.layer[l].b[gate] =
          Eigen::VectorXd::Constant(hidden_size, gate == kGateF ? 1.0 : 0.0);
    }
  }
  fill(m.decoder_w, vocab_size, hidden_size);
  m.decoder_b = Eigen::VectorXd::Zero(vocab_size);
  return m;
}

std::vector<Eigen::VectorXd> embed_with_bos(const LstmModel& m, TokenId bos,
                                            std::span<const TokenId> tokens) {
  std::vector<Eigen::VectorXd> inputs;
  inputs.reserve(tokens.size() + 1);
  inputs.push_back(m.embedding.row(bos).transpose());
  for (TokenId t : tokens) inputs.push_back(m.embedding.row(t).transpose());
  return inputs;
}

namespace {

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return 1.0 / (1.0 + (-x.array()).exp());
}

}  // namespace

ActivationTrace forward(const LstmModel& m, std::span<const Eigen::VectorXd> inputs,
                        bool want_logits) {
  const int H = m.hidden_size;
  ActivationTrace trace;
  trace.inputs.assign(inputs.begin(), inputs.end());
  trace.steps.resize(inputs.size());
  if (want_logits) trace.logits.resize(inputs.size());

  std::array<Eigen::VectorXd, 2> h_prev, c_prev;
  for (int l = 0; l < m.num_layers; ++l) {
    h_prev[l] = Eigen::VectorXd::Zero(H);
    c_prev[l] = Eigen::VectorXd::Zero(H);
  }

  for (size_t t = 0; t < inputs.size(); ++t) {
    if (inputs[t].size() != m.embedding_dim)
      throw std::invalid_argument("input embedding has wrong dimension");
    const Eigen::VectorXd* x = &inputs[t];
    for (int l = 0; l < m.num_layers; ++l) {
      LayerStep& step = trace.steps[t][l];
      const LstmLayerParams& p = m.layer[l];
      for (int gate = 0; gate < kNumGates; ++gate)
        step.pre[gate] = p.w[gate] * (*x) + p.u[gate] * h_prev[l] + p.b[gate];
      step.act[kGateF] = sigmoid(step.pre[kGateF]);
      step.act[kGateI] = sigmoid(step.pre[kGateI]);
      step.act[kGateO] = sigmoid(step.pre[kGateO]);
      step.act[kGateG] = step.pre[kGateG].array().tanh();
      step.c = step.act[kGateF].cwiseProduct(c_prev[l]) +
               step.act[kGateI].cwiseProduct(step.act[kGateG]);
      step.h = step.act[kGateO].cwiseProduct(step.c.array().tanh().matrix());
      c_prev[l] = step.c;
      h_prev[l] = step.h;
      x = &step.h;
    }
    if (want_logits)
      trace.logits[t] = m.decoder_w * h_prev[m.num_layers - 1] + m.decoder_b;
  }
  return trace;
}

double na_accuracy(const LstmModel& m, TokenId bos, std::span<const TaskInstance> data) {
  if (data.empty()) return 0.0;
  int correct = 0;
  for (const TaskInstance& inst : data) {
    const auto inputs = embed_with_bos(m, bos, inst.tokens);
    const ActivationTrace trace = forward(m, inputs, /*want_logits=*/false);
    const Eigen::VectorXd& h = trace.steps[static_cast<size_t>(score_time(inst.t_verb))]
                                   [static_cast<size_t>(m.num_layers - 1)].h;
    const double s_good = m.decoder_w.row(inst.verb_correct).dot(h) +
                          m.decoder_b(inst.verb_correct);
    const double s_bad = m.decoder_w.row(inst.verb_wrong).dot(h) +
                         m.decoder_b(inst.verb_wrong);
    if (s_good > s_bad) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw std::runtime_error("ragged matrix in checkpoint");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<size_t>(c)).get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<size_t>(i)).get<double>();
  return v;
}

const char* kGateKeys[kNumGates] = {"f", "i", "o", "g"};

}  // namespace

void save_checkpoint(const LstmModel& m, const std::string& path, const FileMeta& meta) {
  nlohmann::json j;
  j["format"] = "ipaths-ckpt-1";
  j["tool_version"] = meta.tool_version;
  j["config_hash"] = meta.config_hash;
  j["embedding_dim"] = m.embedding_dim;
  j["hidden_size"] = m.hidden_size;
  j["num_layers"] = m.num_layers;
  j["vocab_size"] = m.vocab_size;
  j["vocab"] = m.vocab;
  j["embedding"] = matrix_json(m.embedding);
  nlohmann::json layers = nlohmann::json::array();
  for (int l = 0; l < m.num_layers; ++l) {
    nlohmann::json lj;
    for (int gate = 0; gate < kNumGates; ++gate) {
      lj["w"][kGateKeys[gate]] = matrix_json(m.layer[l].w[gate]);
      lj["u"][kGateKeys[gate]] = matrix_json(m.layer[l].u[gate]);
      lj["b"][kGateKeys[gate]] = vector_json(m.layer[l].b[gate]);
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["decoder_w"] = matrix_json(m.decoder_w);
  j["decoder_b"] = vector_json(m.decoder_b);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump() << "\n";
}

LstmModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "ipaths-ckpt-1")
    throw std::runtime_error("not a checkpoint file: " + path);

  LstmModel m;
  m.embedding_dim = j.at("embedding_dim").get<int>();
  m.hidden_size = j.at("hidden_size").get<int>();
  m.num_layers = j.at("num_layers").get<int>();
  m.vocab_size = j.at("vocab_size").get<int>();
  m.vocab = j.at("vocab").get<std::vector<std::string>>();
  m.embedding = matrix_from_json(j.at("embedding"));
  if (m.num_layers != 2) throw std::runtime_error("expected a 2-layer checkpoint");
  for (int l = 0; l < m.num_layers; ++l) {
    const auto& lj = j.at("layers").at(static_cast<size_t>(l));
    for (int gate = 0; gate < kNumGates; ++gate) {
      m.layer[l].w[gate] = matrix_from_json(lj.at("w").at(kGateKeys[gate]));
      m.layer[l].u[gate] = matrix_from_json(lj.at("u").at(kGateKeys[gate]));
      m.layer[l].b[gate] = vector_from_json(lj.at("b").at(kGateKeys[gate]));
    }
  }
  m.decoder_w = matrix_from_json(j.at("decoder_w"));
  m.decoder_b = vector_from_json(j.at("decoder_b"));

  if (m.embedding.rows() != m.vocab_size || m.embedding.cols() != m.embedding_dim ||
      m.decoder_w.rows() != m.vocab_size || m.decoder_w.cols() != m.hidden_size)
    throw std::runtime_error("checkpoint shape mismatch");
  return m;
}

}  // namespace ipaths
