#pragma once

// From-scratch dense / LSTM / GRU classifiers with full backpropagation
// through time, MSE loss, RMSProp and inverted dropout.
//
// All passes are batched: a batch is a (dim x B) column-major matrix and
// every step activation is (units x B), so the hot path is dgemm. Flat
// sample vectors are reshaped to (l_w - 1) timesteps of 80 (binary) or
// 81 (multiclass: 80 features + incoming direction) values.

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace firecast::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ModelKind { LR, LSTM, GRU };
enum class Activation { linear, relu, sigmoid, tanh_fn };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LR: return "LR";
    case ModelKind::LSTM: return "LSTM";
    case ModelKind::GRU: return "GRU";
  }
  return "?";
}

inline ModelKind model_kind_from(const std::string& s) {
  if (s == "LR" || s == "lr") return ModelKind::LR;
  if (s == "LSTM" || s == "lstm") return ModelKind::LSTM;
  if (s == "GRU" || s == "gru") return ModelKind::GRU;
  throw std::invalid_argument("unknown model kind: " + s);
}

struct ModelSpec {
  ModelKind kind = ModelKind::LR;
  int steps = 1;         // l_w - 1
  int per_step_dim = 80; // 80 binary, 81 multiclass
  std::vector<int> hidden{128, 256};
  double dropout_rate = 0.2;
  int n_classes = 2;
  int epochs = 300;
  int batch_size = 32;
  double learning_rate = 0.001;
  double rho = 0.9;
  double epsilon = 1e-8;
  Activation cell_activation = Activation::relu;
  std::uint64_t seed = 0;

  int input_dim() const { return steps * per_step_dim; }
};

inline ModelSpec default_spec(ModelKind kind, int steps, int per_step_dim, int n_classes) {
  ModelSpec s;
  s.kind = kind;
  s.steps = steps;
  s.per_step_dim = per_step_dim;
  s.n_classes = n_classes;
  s.epochs = (kind == ModelKind::LR) ? 300 : 20;
  return s;
}

namespace detail {

inline Matrix sigmoid(const Matrix& x) {
  return 1.0 / (1.0 + (-x.array()).exp());
}

inline Matrix apply_act(Activation a, const Matrix& x) {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return x.cwiseMax(0.0);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh_fn: return x.array().tanh().matrix();
  }
  return x;
}

// Derivative w.r.t. preactivation, expressed from preactivation `pre`
// and activation value `val`.
inline Matrix act_deriv(Activation a, const Matrix& pre, const Matrix& val) {
  switch (a) {
    case Activation::linear: return Matrix::Ones(pre.rows(), pre.cols());
    case Activation::relu: return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::sigmoid: return (val.array() * (1.0 - val.array())).matrix();
    case Activation::tanh_fn: return (1.0 - val.array().square()).matrix();
  }
  return Matrix::Ones(pre.rows(), pre.cols());
}

inline void check_finite(const Matrix& m, const char* where) {
#ifndef NDEBUG
  if (!m.allFinite()) throw std::runtime_error(std::string("non-finite values in ") + where);
#else
  (void)m;
  (void)where;
#endif
}

}  // namespace detail

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param(std::string n, int rows, int cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
};

// Glorot-uniform for input weights.
inline void init_glorot(Matrix& w, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
}

// Orthogonal recurrent weights via QR of a seeded Gaussian matrix, with
// column signs fixed from the R diagonal.
inline void init_orthogonal(Matrix& w, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix g(w.rows(), w.cols());
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = dist(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(w.rows(), w.cols());
  Matrix r = qr.matrixQR().topRows(w.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  w = q;
}

// ---------------------------------------------------------------------------
// Layers

struct DenseLayer {
  Param W, b;
  Activation act;

  DenseLayer(const std::string& prefix, int in, int out, Activation a)
      : W(prefix + ".W", out, in), b(prefix + ".b", out, 1), act(a) {}

  Matrix x_cache, pre_cache, out_cache;

  Matrix forward(const Matrix& x) {
    if (x.rows() != W.value.cols())
      throw std::invalid_argument("dense_forward: input dim " + std::to_string(x.rows()) +
                                  " != " + std::to_string(W.value.cols()));
    x_cache = x;
    pre_cache = W.value * x;
    pre_cache.colwise() += b.value.col(0);
    out_cache = detail::apply_act(act, pre_cache);
    detail::check_finite(out_cache, "dense_forward");
    return out_cache;
  }

  // Accumulates into grads; returns gradient w.r.t. the input.
  Matrix backward(const Matrix& dout) {
    Matrix da = dout.cwiseProduct(detail::act_deriv(act, pre_cache, out_cache));
    W.grad.noalias() += da * x_cache.transpose();
    b.grad.col(0) += da.rowwise().sum();
    return W.value.transpose() * da;
  }
};

// Standard forget/input/output/candidate LSTM without peepholes. Gates
// are logistic; the candidate and cell output use `act`.
struct LstmLayer {
  int in, units;
  Activation act;
  Param Wi, Wf, Wo, Wg, Ui, Uf, Uo, Ug, bi, bf, bo, bg;

  LstmLayer(const std::string& prefix, int in_, int units_, Activation a)
      : in(in_), units(units_), act(a),
        Wi(prefix + ".Wi", units_, in_), Wf(prefix + ".Wf", units_, in_),
        Wo(prefix + ".Wo", units_, in_), Wg(prefix + ".Wg", units_, in_),
        Ui(prefix + ".Ui", units_, units_), Uf(prefix + ".Uf", units_, units_),
        Uo(prefix + ".Uo", units_, units_), Ug(prefix + ".Ug", units_, units_),
        bi(prefix + ".bi", units_, 1), bf(prefix + ".bf", units_, 1),
        bo(prefix + ".bo", units_, 1), bg(prefix + ".bg", units_, 1) {}

  struct StepCache {
    Matrix x, h_prev, c_prev, i, f, o, g, a_g, c, act_c;
  };
  std::vector<StepCache> cache;

  std::vector<Matrix> forward(const std::vector<Matrix>& xs) {
    const auto B = xs.empty() ? 0 : xs.front().cols();
    cache.clear();
    cache.reserve(xs.size());
    std::vector<Matrix> hs;
    hs.reserve(xs.size());
    Matrix h = Matrix::Zero(units, B);
    Matrix c = Matrix::Zero(units, B);
    for (const auto& x : xs) {
      if (x.rows() != in) throw std::invalid_argument("lstm_step: input dim mismatch");
      StepCache sc;
      sc.x = x;
      sc.h_prev = h;
      sc.c_prev = c;
      Matrix ai = Wi.value * x + Ui.value * h;
      ai.colwise() += bi.value.col(0);
      Matrix af = Wf.value * x + Uf.value * h;
      af.colwise() += bf.value.col(0);
      Matrix ao = Wo.value * x + Uo.value * h;
      ao.colwise() += bo.value.col(0);
      sc.a_g = Wg.value * x + Ug.value * h;
      sc.a_g.colwise() += bg.value.col(0);
      sc.i = detail::sigmoid(ai);
      sc.f = detail::sigmoid(af);
      sc.o = detail::sigmoid(ao);
      sc.g = detail::apply_act(act, sc.a_g);
      c = sc.f.cwiseProduct(sc.c_prev) + sc.i.cwiseProduct(sc.g);
      sc.c = c;
      sc.act_c = detail::apply_act(act, c);
      h = sc.o.cwiseProduct(sc.act_c);
      detail::check_finite(h, "lstm_step");
      cache.push_back(std::move(sc));
      hs.push_back(h);
    }
    return hs;
  }

  // dhs_ext: per-step external gradients (zero matrices allowed).
  std::vector<Matrix> backward(const std::vector<Matrix>& dhs_ext) {
    const auto T = cache.size();
    const auto B = cache.front().x.cols();
    std::vector<Matrix> dxs(T);
    Matrix dh_carry = Matrix::Zero(units, B);
    Matrix dc_carry = Matrix::Zero(units, B);
    for (std::size_t t = T; t-- > 0;) {
      const auto& sc = cache[t];
      Matrix dh = dhs_ext[t] + dh_carry;
      Matrix d_o = dh.cwiseProduct(sc.act_c);
      Matrix da_o = d_o.cwiseProduct(sc.o.cwiseProduct((1.0 - sc.o.array()).matrix()));
      Matrix dc =
          dh.cwiseProduct(sc.o).cwiseProduct(detail::act_deriv(act, sc.c, sc.act_c)) + dc_carry;
      Matrix df = dc.cwiseProduct(sc.c_prev);
      Matrix da_f = df.cwiseProduct(sc.f.cwiseProduct((1.0 - sc.f.array()).matrix()));
      Matrix di = dc.cwiseProduct(sc.g);
      Matrix da_i = di.cwiseProduct(sc.i.cwiseProduct((1.0 - sc.i.array()).matrix()));
      Matrix dg = dc.cwiseProduct(sc.i);
      Matrix da_g = dg.cwiseProduct(detail::act_deriv(act, sc.a_g, sc.g));

      Wi.grad.noalias() += da_i * sc.x.transpose();
      Wf.grad.noalias() += da_f * sc.x.transpose();
      Wo.grad.noalias() += da_o * sc.x.transpose();
      Wg.grad.noalias() += da_g * sc.x.transpose();
      Ui.grad.noalias() += da_i * sc.h_prev.transpose();
      Uf.grad.noalias() += da_f * sc.h_prev.transpose();
      Uo.grad.noalias() += da_o * sc.h_prev.transpose();
      Ug.grad.noalias() += da_g * sc.h_prev.transpose();
      bi.grad.col(0) += da_i.rowwise().sum();
      bf.grad.col(0) += da_f.rowwise().sum();
      bo.grad.col(0) += da_o.rowwise().sum();
      bg.grad.col(0) += da_g.rowwise().sum();

      dxs[t] = Wi.value.transpose() * da_i + Wf.value.transpose() * da_f +
               Wo.value.transpose() * da_o + Wg.value.transpose() * da_g;
      dh_carry = Ui.value.transpose() * da_i + Uf.value.transpose() * da_f +
                 Uo.value.transpose() * da_o + Ug.value.transpose() * da_g;
      dc_carry = dc.cwiseProduct(sc.f);
    }
    return dxs;
  }
};

// GRU: update/reset gates logistic, candidate uses `act`;
// h_t = (1 - z) o h_prev + z o h~.
struct GruLayer {
  int in, units;
  Activation act;
  Param Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh;

  GruLayer(const std::string& prefix, int in_, int units_, Activation a)
      : in(in_), units(units_), act(a),
        Wz(prefix + ".Wz", units_, in_), Wr(prefix + ".Wr", units_, in_),
        Wh(prefix + ".Wh", units_, in_),
        Uz(prefix + ".Uz", units_, units_), Ur(prefix + ".Ur", units_, units_),
        Uh(prefix + ".Uh", units_, units_),
        bz(prefix + ".bz", units_, 1), br(prefix + ".br", units_, 1),
        bh(prefix + ".bh", units_, 1) {}

  struct StepCache {
    Matrix x, h_prev, z, r, rh, a_h, h_cand;
  };
  std::vector<StepCache> cache;

  std::vector<Matrix> forward(const std::vector<Matrix>& xs) {
    const auto B = xs.empty() ? 0 : xs.front().cols();
    cache.clear();
    cache.reserve(xs.size());
    std::vector<Matrix> hs;
    hs.reserve(xs.size());
    Matrix h = Matrix::Zero(units, B);
    for (const auto& x : xs) {
      if (x.rows() != in) throw std::invalid_argument("gru_step: input dim mismatch");
      StepCache sc;
      sc.x = x;
      sc.h_prev = h;
      Matrix az = Wz.value * x + Uz.value * h;
      az.colwise() += bz.value.col(0);
      Matrix ar = Wr.value * x + Ur.value * h;
      ar.colwise() += br.value.col(0);
      sc.z = detail::sigmoid(az);
      sc.r = detail::sigmoid(ar);
      sc.rh = sc.r.cwiseProduct(h);
      sc.a_h = Wh.value * x + Uh.value * sc.rh;
      sc.a_h.colwise() += bh.value.col(0);
      sc.h_cand = detail::apply_act(act, sc.a_h);
      h = (1.0 - sc.z.array()).matrix().cwiseProduct(sc.h_prev) + sc.z.cwiseProduct(sc.h_cand);
      detail::check_finite(h, "gru_step");
      cache.push_back(std::move(sc));
      hs.push_back(h);
    }
    return hs;
  }

  std::vector<Matrix> backward(const std::vector<Matrix>& dhs_ext) {
    const auto T = cache.size();
    const auto B = cache.front().x.cols();
    std::vector<Matrix> dxs(T);
    Matrix dh_carry = Matrix::Zero(units, B);
    for (std::size_t t = T; t-- > 0;) {
      const auto& sc = cache[t];
      Matrix dh = dhs_ext[t] + dh_carry;
      Matrix dz = dh.cwiseProduct(sc.h_cand - sc.h_prev);
      Matrix da_z = dz.cwiseProduct(sc.z.cwiseProduct((1.0 - sc.z.array()).matrix()));
      Matrix dcand = dh.cwiseProduct(sc.z);
      Matrix da_h = dcand.cwiseProduct(detail::act_deriv(act, sc.a_h, sc.h_cand));
      Matrix drh = Uh.value.transpose() * da_h;
      Matrix dr = drh.cwiseProduct(sc.h_prev);
      Matrix da_r = dr.cwiseProduct(sc.r.cwiseProduct((1.0 - sc.r.array()).matrix()));

      Wz.grad.noalias() += da_z * sc.x.transpose();
      Wr.grad.noalias() += da_r * sc.x.transpose();
      Wh.grad.noalias() += da_h * sc.x.transpose();
      Uz.grad.noalias() += da_z * sc.h_prev.transpose();
      Ur.grad.noalias() += da_r * sc.h_prev.transpose();
      Uh.grad.noalias() += da_h * sc.rh.transpose();
      bz.grad.col(0) += da_z.rowwise().sum();
      br.grad.col(0) += da_r.rowwise().sum();
      bh.grad.col(0) += da_h.rowwise().sum();

      dxs[t] = Wz.value.transpose() * da_z + Wr.value.transpose() * da_r +
               Wh.value.transpose() * da_h;
      dh_carry = dh.cwiseProduct((1.0 - sc.z.array()).matrix()) + drh.cwiseProduct(sc.r) +
                 Uz.value.transpose() * da_z + Ur.value.transpose() * da_r;
    }
    return dxs;
  }
};

// ---------------------------------------------------------------------------
// Loss

struct MseResult {
  double loss;
  Matrix grad;  // w.r.t. scores
};

// Mean over classes of squared error; for a batch, additionally averaged
// over columns so the parameter gradients come out batch-averaged.
inline MseResult mse_loss(const Matrix& scores, const Matrix& target) {
  if (scores.rows() != target.rows() || scores.cols() != target.cols())
    throw std::invalid_argument("mse_loss: shape mismatch");
  const double n = static_cast<double>(scores.rows()) * static_cast<double>(scores.cols());
  Matrix diff = scores - target;
  return {diff.array().square().sum() / n, (2.0 / n) * diff};
}

// ---------------------------------------------------------------------------
// Model

class Model {
 public:
  explicit Model(const ModelSpec& spec) : spec_(spec) {
    if (spec.kind == ModelKind::LR) {
      out_ = std::make_unique<DenseLayer>("out", spec.input_dim(), spec.n_classes,
                                          Activation::sigmoid);
    } else {
      if (spec.hidden.size() != 2)
        throw std::invalid_argument("recurrent models use exactly two hidden layers");
      in_dense_ = std::make_unique<DenseLayer>("in", spec.per_step_dim, spec.per_step_dim,
                                               Activation::linear);
      if (spec.kind == ModelKind::LSTM) {
        lstm1_ = std::make_unique<LstmLayer>("l1", spec.per_step_dim, spec.hidden[0],
                                             spec.cell_activation);
        lstm2_ = std::make_unique<LstmLayer>("l2", spec.hidden[0], spec.hidden[1],
                                             spec.cell_activation);
      } else {
        gru1_ = std::make_unique<GruLayer>("l1", spec.per_step_dim, spec.hidden[0],
                                           spec.cell_activation);
        gru2_ = std::make_unique<GruLayer>("l2", spec.hidden[0], spec.hidden[1],
                                           spec.cell_activation);
      }
      out_ = std::make_unique<DenseLayer>("out", spec.hidden[1], spec.n_classes,
                                          Activation::sigmoid);
    }
  }

  const ModelSpec& spec() const { return spec_; }

  std::vector<Param*> params() {
    std::vector<Param*> ps;
    if (in_dense_) {
      ps.push_back(&in_dense_->W);
      ps.push_back(&in_dense_->b);
    }
    auto add_lstm = [&](LstmLayer& l) {
      for (Param* p : {&l.Wi, &l.Wf, &l.Wo, &l.Wg, &l.Ui, &l.Uf, &l.Uo, &l.Ug, &l.bi, &l.bf,
                       &l.bo, &l.bg})
        ps.push_back(p);
    };
    auto add_gru = [&](GruLayer& l) {
      for (Param* p : {&l.Wz, &l.Wr, &l.Wh, &l.Uz, &l.Ur, &l.Uh, &l.bz, &l.br, &l.bh})
        ps.push_back(p);
    };
    if (lstm1_) add_lstm(*lstm1_);
    if (lstm2_) add_lstm(*lstm2_);
    if (gru1_) add_gru(*gru1_);
    if (gru2_) add_gru(*gru2_);
    ps.push_back(&out_->W);
    ps.push_back(&out_->b);
    return ps;
  }

  void init_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (Param* p : params()) {
      if (p->value.cols() == 1)
        p->value.setZero();
      else if (p->name.find(".U") != std::string::npos)
        init_orthogonal(p->value, rng);
      else
        init_glorot(p->value, rng);
    }
    // Forget-gate bias at 1 stabilizes early LSTM training.
    if (lstm1_) lstm1_->bf.value.setOnes();
    if (lstm2_) lstm2_->bf.value.setOnes();
  }

  void zero_grads() {
    for (Param* p : params()) p->grad.setZero();
  }

  // X: (input_dim x B). Train mode samples a fresh dropout mask from rng.
  Matrix forward(const Matrix& X, bool train = false, std::mt19937_64* rng = nullptr) {
    if (X.rows() != spec_.input_dim())
      throw std::invalid_argument("model_forward: input dim " + std::to_string(X.rows()) +
                                  " != " + std::to_string(spec_.input_dim()));
    if (spec_.kind == ModelKind::LR) {
      dropout_mask_.resize(0, 0);
      return out_->forward(X);
    }
    auto xs = reshape_steps(X);
    auto ys = split_forward_dense(xs);
    std::vector<Matrix> h1 =
        lstm1_ ? lstm1_->forward(ys) : gru1_->forward(ys);
    std::vector<Matrix> h2 = lstm2_ ? lstm2_->forward(h1) : gru2_->forward(h1);
    Matrix h_last = h2.back();
    if (train && spec_.dropout_rate > 0.0) {
      if (!rng) throw std::invalid_argument("train-mode forward needs an rng");
      dropout_mask_ = sample_mask(h_last.rows(), h_last.cols(), *rng);
      h_last = h_last.cwiseProduct(dropout_mask_);
    } else {
      dropout_mask_ = Matrix::Ones(h_last.rows(), h_last.cols());
    }
    return out_->forward(h_last);
  }

  // Gradient of the loss w.r.t. the forward scores; fills param grads.
  void backward(const Matrix& dscores) {
    Matrix dh = out_->backward(dscores);
    if (spec_.kind == ModelKind::LR) return;
    dh = dh.cwiseProduct(dropout_mask_);
    const auto B = dh.cols();
    std::vector<Matrix> dh2(static_cast<std::size_t>(spec_.steps),
                            Matrix::Zero(spec_.hidden[1], B));
    dh2.back() = dh;
    auto dh1 = lstm2_ ? lstm2_->backward(dh2) : gru2_->backward(dh2);
    auto dys = lstm1_ ? lstm1_->backward(dh1) : gru1_->backward(dh1);
    for (std::size_t t = 0; t < dys.size(); ++t) {
      in_dense_->W.grad.noalias() += dys[t] * dense_x_cache_[t].transpose();
      in_dense_->b.grad.col(0) += dys[t].rowwise().sum();
    }
  }

  int hidden_units(int layer) const { return spec_.hidden.at(static_cast<std::size_t>(layer)); }

 private:
  // The per-step dense shares weights across steps; forward caches each
  // step so backward can accumulate over them.
  std::vector<Matrix> split_forward_dense(const std::vector<Matrix>& xs) {
    dense_x_cache_ = xs;
    std::vector<Matrix> ys;
    ys.reserve(xs.size());
    for (const auto& x : xs) {
      Matrix y = in_dense_->W.value * x;
      y.colwise() += in_dense_->b.value.col(0);
      ys.push_back(std::move(y));
    }
    return ys;
  }

  std::vector<Matrix> reshape_steps(const Matrix& X) const {
    std::vector<Matrix> xs;
    xs.reserve(static_cast<std::size_t>(spec_.steps));
    const int feat = 80;
    if (spec_.per_step_dim == feat) {
      for (int t = 0; t < spec_.steps; ++t) xs.push_back(X.middleRows(t * feat, feat));
    } else if (spec_.per_step_dim == feat + 1) {
      // Flat layout: all 80-blocks first, then the direction block.
      for (int t = 0; t < spec_.steps; ++t) {
        Matrix x(feat + 1, X.cols());
        x.topRows(feat) = X.middleRows(t * feat, feat);
        x.row(feat) = X.row(feat * spec_.steps + t);
        xs.push_back(std::move(x));
      }
    } else {
      for (int t = 0; t < spec_.steps; ++t)
        xs.push_back(X.middleRows(t * spec_.per_step_dim, spec_.per_step_dim));
    }
    return xs;
  }

  Matrix sample_mask(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep = 1.0 - spec_.dropout_rate;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng) < keep ? 1.0 / keep : 0.0;
    return m;
  }

  ModelSpec spec_;
  std::unique_ptr<DenseLayer> in_dense_;
  std::unique_ptr<LstmLayer> lstm1_, lstm2_;
  std::unique_ptr<GruLayer> gru1_, gru2_;
  std::unique_ptr<DenseLayer> out_;
  Matrix dropout_mask_;
  std::vector<Matrix> dense_x_cache_;
};

}  // namespace firecast::nn
