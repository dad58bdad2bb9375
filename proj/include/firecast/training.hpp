#pragma once

// RMSProp optimizer, mini-batch training loop, argmax decoding, the
// finite-difference gradient checker and text checkpoints.

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "firecast/neuralnet.hpp"

namespace firecast::nn {

struct Dataset {
  Matrix inputs;            // (dim x N)
  std::vector<int> labels;  // 0-based class indices

  Eigen::Index size() const { return inputs.cols(); }
};

struct RmsPropState {
  double learning_rate = 0.001;
  double rho = 0.9;
  double epsilon = 1e-8;
  std::vector<Matrix> mean_square;  // aligned with the param list

  void attach(const std::vector<Param*>& params) {
    mean_square.clear();
    for (const Param* p : params)
      mean_square.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
};

inline void rmsprop_update(const std::vector<Param*>& params, RmsPropState& st) {
  if (st.mean_square.size() != params.size())
    throw std::invalid_argument("rmsprop_update: state not attached");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    Matrix& ms = st.mean_square[i];
    if (ms.rows() != p.grad.rows() || ms.cols() != p.grad.cols())
      throw std::invalid_argument("rmsprop_update: shape mismatch for " + p.name);
    ms = st.rho * ms + (1.0 - st.rho) * p.grad.array().square().matrix();
    p.value.array() -= st.learning_rate * p.grad.array() / (ms.array() + st.epsilon).sqrt();
  }
}

inline Matrix one_hot_targets(const std::vector<int>& labels, int n_classes) {
  Matrix t = Matrix::Zero(n_classes, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes)
      throw std::invalid_argument("label out of range: " + std::to_string(labels[i]));
    t(labels[i], static_cast<Eigen::Index>(i)) = 1.0;
  }
  return t;
}

struct TrainResult {
  std::vector<double> loss_history;  // one entry per epoch
};

// Seeded mini-batch RMSProp. One rng drives both the per-epoch shuffle
// and the dropout masks, so (seed, data, spec) fixes the trajectory.
inline TrainResult train(Model& model, const Dataset& data, std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  const ModelSpec& spec = model.spec();
  model.init_params(seed);
  auto params = model.params();
  RmsPropState opt{spec.learning_rate, spec.rho, spec.epsilon, {}};
  opt.attach(params);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  TrainResult res;
  res.loss_history.reserve(static_cast<std::size_t>(spec.epochs));

  Matrix targets = one_hot_targets(data.labels, spec.n_classes);
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < data.size(); start += spec.batch_size) {
      Eigen::Index b = std::min<Eigen::Index>(spec.batch_size, data.size() - start);
      Matrix X(data.inputs.rows(), b);
      Matrix T(spec.n_classes, b);
      for (Eigen::Index j = 0; j < b; ++j) {
        X.col(j) = data.inputs.col(order[static_cast<std::size_t>(start + j)]);
        T.col(j) = targets.col(order[static_cast<std::size_t>(start + j)]);
      }
      model.zero_grads();
      Matrix scores = model.forward(X, /*train=*/true, &rng);
      auto [loss, dscores] = mse_loss(scores, T);
      model.backward(dscores);
      rmsprop_update(params, opt);
      epoch_loss += loss * static_cast<double>(b);
    }
    res.loss_history.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return res;
}

// Argmax decode, ties to the lowest class index.
inline int predict_one(const Matrix& scores, Eigen::Index col) {
  int best = 0;
  double best_v = scores(0, col);
  for (int c = 1; c < scores.rows(); ++c)
    if (scores(c, col) > best_v) {
      best_v = scores(c, col);
      best = c;
    }
  return best;
}

inline std::vector<int> predict(Model& model, const Matrix& inputs) {
  Matrix scores = model.forward(inputs, /*train=*/false);
  std::vector<int> out(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index j = 0; j < inputs.cols(); ++j)
    out[static_cast<std::size_t>(j)] = predict_one(scores, j);
  return out;
}

inline double accuracy(Model& model, const Dataset& data) {
  auto preds = predict(model, data.inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == data.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

// Central finite differences (h = 1e-5) against the analytic gradients.
// Returns the max relative error over every parameter entry.
//
// The check point is deliberately cancellation-free: positive weights
// scaled by fan-in, positive inputs and an all-zero target keep every
// path monotone, so no gradient sits near the f64 finite-difference
// noise floor where the relative error would measure rounding instead
// of backward correctness. Eval-mode forward, so no dropout
// stochasticity.
inline double gradient_check(Model& model, std::uint64_t seed, double h = 1e-5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 0.6);
  const ModelSpec& spec = model.spec();
  for (Param* p : model.params()) {
    double denom = static_cast<double>(p->value.cols()) + 2.0;
    std::uniform_real_distribution<double> w(0.4 / denom, 1.2 / denom);
    for (Eigen::Index j = 0; j < p->value.cols(); ++j)
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) p->value(i, j) = w(rng);
  }
  Matrix x(spec.input_dim(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = u(rng);
  Matrix target = Matrix::Zero(spec.n_classes, 1);

  model.zero_grads();
  Matrix scores = model.forward(x, /*train=*/false);
  auto [loss0, dscores] = mse_loss(scores, target);
  model.backward(dscores);

  auto loss_at = [&]() {
    Matrix s = model.forward(x, /*train=*/false);
    return mse_loss(s, target).loss;
  };

  double max_rel = 0.0;
  for (Param* p : model.params()) {
    for (Eigen::Index j = 0; j < p->value.cols(); ++j)
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
        double orig = p->value(i, j);
        p->value(i, j) = orig + h;
        double lp = loss_at();
        p->value(i, j) = orig - h;
        double lm = loss_at();
        p->value(i, j) = orig;
        double numeric = (lp - lm) / (2.0 * h);
        double analytic = p->grad(i, j);
        double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-12});
        max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
      }
  }
  return max_rel;
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned text container with shape headers.

inline void save_checkpoint(Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  const ModelSpec& s = model.spec();
  out << "firecast-model v1\n";
  out << "kind " << to_string(s.kind) << "\n";
  out << "steps " << s.steps << "\n";
  out << "per_step_dim " << s.per_step_dim << "\n";
  out << "hidden " << s.hidden[0] << " " << s.hidden[1] << "\n";
  out << "dropout_rate " << s.dropout_rate << "\n";
  out << "n_classes " << s.n_classes << "\n";
  out << "cell_activation " << (s.cell_activation == Activation::relu ? "relu" : "tanh") << "\n";
  out << std::setprecision(17);
  auto params = model.params();
  out << "params " << params.size() << "\n";
  for (Param* p : params) {
    out << p->name << " " << p->value.rows() << " " << p->value.cols() << "\n";
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
        if (j) out << ' ';
        out << p->value(i, j);
      }
      out << '\n';
    }
  }
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "firecast-model v1") throw std::runtime_error("bad checkpoint format tag");
  ModelSpec s;
  std::string key;
  std::string kind_s, act_s;
  in >> key >> kind_s;                     // kind
  in >> key >> s.steps;                    // steps
  in >> key >> s.per_step_dim;             // per_step_dim
  in >> key >> s.hidden[0] >> s.hidden[1]; // hidden
  in >> key >> s.dropout_rate;             // dropout_rate
  in >> key >> s.n_classes;                // n_classes
  in >> key >> act_s;                      // cell_activation
  s.kind = model_kind_from(kind_s);
  s.cell_activation = act_s == "relu" ? Activation::relu : Activation::tanh_fn;
  Model model(s);
  std::size_t n;
  in >> key >> n;  // params
  auto params = model.params();
  if (n != params.size()) throw std::runtime_error("checkpoint parameter count mismatch");
  for (Param* p : params) {
    std::string name;
    Eigen::Index rows, cols;
    in >> name >> rows >> cols;
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols())
      throw std::runtime_error("checkpoint tensor mismatch at " + p->name);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) in >> p->value(i, j);
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return model;
}

}  // namespace firecast::nn
