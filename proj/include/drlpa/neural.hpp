#pragma once

// Feed-forward networks with exact backpropagation and Adam, float64.
// Samples are columns: a batch of B inputs is an (input_dim x B) matrix.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "drlpa/common.hpp"

namespace drlpa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kLinear, kSoftmax, kScaledSigmoid };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
    case Activation::kSoftmax: return "softmax";
    case Activation::kScaledSigmoid: return "scaled_sigmoid";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kLinear;
  if (s == "softmax") return Activation::kSoftmax;
  if (s == "scaled_sigmoid") return Activation::kScaledSigmoid;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// ln softmax(z) via shifted log-sum-exp.
inline std::vector<double> log_softmax(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - m);
  const double lse = m + std::log(acc);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

struct Layer {
  Activation activation = Activation::kLinear;
  double scale = 1.0;  // output scale of kScaledSigmoid
  Matrix w;            // out x in
  Vector b;            // out

  int in() const { return static_cast<int>(w.cols()); }
  int out() const { return static_cast<int>(w.rows()); }
};

struct LayerSpec {
  int units = 0;
  Activation activation = Activation::kRelu;
  double scale = 1.0;
};

/// Per-forward intermediates needed by backward.
struct ForwardCache {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;
  bool valid = false;
};

/// Parameter gradients shaped like the network, plus the input gradient.
struct GradientTape {
  std::vector<Matrix> dw;
  std::vector<Vector> db;
  Matrix input_grad;

  void zero() {
    for (auto& m : dw) m.setZero();
    for (auto& v : db) v.setZero();
    input_grad.setZero();
  }

  bool finite() const {
    return std::all_of(dw.begin(), dw.end(), [](const Matrix& m) { return m.allFinite(); }) &&
           std::all_of(db.begin(), db.end(), [](const Vector& v) { return v.allFinite(); });
  }

  GradientTape& operator+=(const GradientTape& o) {
    for (std::size_t i = 0; i < dw.size(); ++i) {
      dw[i] += o.dw[i];
      db[i] += o.db[i];
    }
    return *this;
  }
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Which quantity the upstream gradient passed to backward refers to.
enum class GradientAt {
  kOutput,         // dL/d(activated output)
  kPreActivation,  // dL/d(last pre-activation), e.g. e_a - pi for ln softmax
};

class Mlp {
 public:
  Mlp() = default;

  /// He-uniform initialization for ReLU layers, Xavier-uniform otherwise;
  /// zero biases.
  Mlp(int input_dim, const std::vector<LayerSpec>& specs, Rng& rng) {
    if (input_dim <= 0 || specs.empty()) throw std::invalid_argument("empty network");
    int in = input_dim;
    for (const auto& spec : specs) {
      if (spec.units <= 0) throw std::invalid_argument("layer width must be positive");
      Layer l;
      l.activation = spec.activation;
      l.scale = spec.scale;
      const double limit = spec.activation == Activation::kRelu ? std::sqrt(6.0 / in)
                                                                  : std::sqrt(6.0 / (in + spec.units));
      std::uniform_real_distribution<double> u(-limit, limit);
      l.w.resize(spec.units, in);
      // Row-major draw order so initialization does not depend on storage.
      for (int r = 0; r < spec.units; ++r)
        for (int c = 0; c < in; ++c) l.w(r, c) = u(rng);
      l.b = Vector::Zero(spec.units);
      layers_.push_back(std::move(l));
      in = spec.units;
    }
    reset_optimizer();
  }

  explicit Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("empty network");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].b.size() != layers_[i].w.rows())
        throw std::invalid_argument("layer " + std::to_string(i) + " bias size mismatch");
      if (i > 0 && layers_[i - 1].out() != layers_[i].in())
        throw std::invalid_argument("layer dimensions do not chain at layer " + std::to_string(i));
    }
    reset_optimizer();
  }

  int input_dim() const { return layers_.front().in(); }
  int output_dim() const { return layers_.back().out(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  long adam_steps() const { return step_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
    return n;
  }

  GradientTape make_tape() const {
    GradientTape t;
    for (const auto& l : layers_) {
      t.dw.push_back(Matrix::Zero(l.out(), l.in()));
      t.db.push_back(Vector::Zero(l.out()));
    }
    t.input_grad = Matrix::Zero(input_dim(), 1);
    return t;
  }

  /// Batched forward pass; returns the (output_dim x B) output.
  const Matrix& forward(const Matrix& x, ForwardCache& cache) const {
    if (x.rows() != input_dim())
      throw std::invalid_argument("input has " + std::to_string(x.rows()) + " rows, network expects " +
                                  std::to_string(input_dim()));
    const std::size_t nl = layers_.size();
    cache.inputs.resize(nl);
    cache.pre.resize(nl);
    cache.inputs[0] = x;
    for (std::size_t i = 0; i < nl; ++i) {
      const Layer& l = layers_[i];
      Matrix& z = cache.pre[i];
      z.noalias() = l.w * cache.inputs[i];
      z.colwise() += l.b;
      Matrix& y = (i + 1 < nl) ? cache.inputs[i + 1] : cache.output;
      activate(l, z, y);
    }
    cache.valid = true;
    return cache.output;
  }

  std::vector<double> forward(std::span<const double> x, ForwardCache& cache) const {
    const Matrix& y = forward(as_column(x), cache);
    return {y.data(), y.data() + y.size()};
  }

  std::vector<double> predict(std::span<const double> x) const {
    ForwardCache cache;
    return forward(x, cache);
  }

  /// Accumulates parameter gradients (summed over the batch) into `tape` and
  /// overwrites tape.input_grad with the per-sample input gradients.
  void backward(const ForwardCache& cache, const Matrix& upstream, GradientTape& tape,
                GradientAt at = GradientAt::kOutput) const {
    if (!cache.valid || cache.inputs.size() != layers_.size())
      throw std::logic_error("backward called without a cached forward pass");
    if (upstream.rows() != output_dim() || upstream.cols() != cache.output.cols())
      throw std::invalid_argument("output gradient shape mismatch");
    check_tape(tape);

    Matrix delta = upstream;
    for (std::size_t ii = layers_.size(); ii-- > 0;) {
      const Layer& l = layers_[ii];
      const bool last = ii + 1 == layers_.size();
      if (!(last && at == GradientAt::kPreActivation)) {
        activation_backward(l, cache.pre[ii], last ? cache.output : cache.inputs[ii + 1], delta);
      }
      tape.dw[ii].noalias() += delta * cache.inputs[ii].transpose();
      tape.db[ii] += delta.rowwise().sum();
      Matrix next;
      next.noalias() = l.w.transpose() * delta;
      delta.swap(next);
    }
    tape.input_grad = std::move(delta);
  }

  void backward(const ForwardCache& cache, std::span<const double> upstream, GradientTape& tape,
                GradientAt at = GradientAt::kOutput) const {
    backward(cache, as_column(upstream), tape, at);
  }

  void reset_optimizer() {
    m_w_.clear();
    v_w_.clear();
    m_b_.clear();
    v_b_.clear();
    for (const auto& l : layers_) {
      m_w_.push_back(Matrix::Zero(l.out(), l.in()));
      v_w_.push_back(Matrix::Zero(l.out(), l.in()));
      m_b_.push_back(Vector::Zero(l.out()));
      v_b_.push_back(Vector::Zero(l.out()));
    }
    step_ = 0;
  }

  /// One bias-corrected Adam descent step along the tape's gradients.
  void adam_step(const GradientTape& tape, double learning_rate, const AdamConfig& cfg = {}) {
    check_tape(tape);
    ++step_;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
      p.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
    };
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      update(layers_[i].w, tape.dw[i], m_w_[i], v_w_[i]);
      update(layers_[i].b, tape.db[i], m_b_[i], v_b_[i]);
    }
  }

  /// Plain gradient descent step, theta -= lr * grad.
  void sgd_step(const GradientTape& tape, double learning_rate) {
    check_tape(tape);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].w -= learning_rate * tape.dw[i];
      layers_[i].b -= learning_rate * tape.db[i];
    }
  }

  nlohmann::json to_json(bool with_optimizer = true) const {
    nlohmann::json j;
    j["format"] = "drlpa.mlp";
    j["version"] = 1;
    nlohmann::json ls = nlohmann::json::array();
    for (const auto& l : layers_)
      ls.push_back({{"in", l.in()},
                    {"out", l.out()},
                    {"activation", drlpa::to_string(l.activation)},
                    {"scale", l.scale},
                    {"weights", row_major(l.w)},
                    {"bias", row_major(l.b)}});
    j["layers"] = ls;
    if (with_optimizer) {
      nlohmann::json a;
      a["step"] = step_;
      for (const char* key : {"m_w", "v_w", "m_b", "v_b"}) a[key] = nlohmann::json::array();
      for (std::size_t i = 0; i < layers_.size(); ++i) {
        a["m_w"].push_back(row_major(m_w_[i]));
        a["v_w"].push_back(row_major(v_w_[i]));
        a["m_b"].push_back(row_major(m_b_[i]));
        a["v_b"].push_back(row_major(v_b_[i]));
      }
      j["adam"] = a;
    }
    return j;
  }

  static Mlp from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "drlpa.mlp") throw std::invalid_argument("not a network checkpoint");
    if (j.at("version").get<int>() != 1) throw std::invalid_argument("unsupported network checkpoint version");
    std::vector<Layer> layers;
    for (const auto& lj : j.at("layers")) {
      Layer l;
      const int in = lj.at("in").get<int>();
      const int out = lj.at("out").get<int>();
      l.activation = activation_from_string(lj.at("activation").get<std::string>());
      l.scale = lj.value("scale", 1.0);
      l.w = from_row_major(lj.at("weights").get<std::vector<double>>(), out, in);
      l.b = from_row_major(lj.at("bias").get<std::vector<double>>(), out, 1);
      layers.push_back(std::move(l));
    }
    Mlp net(std::move(layers));
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      net.step_ = a.at("step").get<long>();
      for (std::size_t i = 0; i < net.layers_.size(); ++i) {
        const int out = net.layers_[i].out();
        const int in = net.layers_[i].in();
        net.m_w_[i] = from_row_major(a.at("m_w").at(i).get<std::vector<double>>(), out, in);
        net.v_w_[i] = from_row_major(a.at("v_w").at(i).get<std::vector<double>>(), out, in);
        net.m_b_[i] = from_row_major(a.at("m_b").at(i).get<std::vector<double>>(), out, 1);
        net.v_b_[i] = from_row_major(a.at("v_b").at(i).get<std::vector<double>>(), out, 1);
      }
    }
    return net;
  }

  static Matrix as_column(std::span<const double> x) {
    return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  }

 private:
  static std::vector<double> row_major(const Matrix& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    return out;
  }

  static Matrix from_row_major(const std::vector<double>& v, int rows, int cols) {
    if (v.size() != static_cast<std::size_t>(rows) * cols)
      throw std::invalid_argument("checkpoint tensor has wrong size");
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r) * cols + c];
    return m;
  }

  static void activate(const Layer& l, const Matrix& z, Matrix& y) {
    switch (l.activation) {
      case Activation::kRelu:
        y = z.cwiseMax(0.0);
        break;
      case Activation::kLinear:
        y = z;
        break;
      case Activation::kSoftmax:
        y.resize(z.rows(), z.cols());
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
          const double m = z.col(c).maxCoeff();
          y.col(c) = (z.col(c).array() - m).exp();
          y.col(c) /= y.col(c).sum();
        }
        break;
      case Activation::kScaledSigmoid:
        y = z.unaryExpr([s = l.scale](double v) { return s * sigmoid(v); });
        break;
    }
  }

  /// Turns dL/dy into dL/dz in place.
  static void activation_backward(const Layer& l, const Matrix& z, const Matrix& y, Matrix& g) {
    switch (l.activation) {
      case Activation::kRelu:
        g = (z.array() > 0.0).select(g, 0.0);
        break;
      case Activation::kLinear:
        break;
      case Activation::kSoftmax:
        for (Eigen::Index c = 0; c < g.cols(); ++c) {
          const double dot = y.col(c).dot(g.col(c));
          g.col(c) = y.col(c).cwiseProduct((g.col(c).array() - dot).matrix());
        }
        break;
      case Activation::kScaledSigmoid:
        g = g.cwiseProduct(z.unaryExpr([s = l.scale](double v) {
          const double sg = sigmoid(v);
          return s * sg * (1.0 - sg);
        }));
        break;
    }
  }

  void check_tape(const GradientTape& tape) const {
    if (tape.dw.size() != layers_.size() || tape.db.size() != layers_.size())
      throw std::invalid_argument("gradient tape shape mismatch");
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (tape.dw[i].rows() != layers_[i].w.rows() || tape.dw[i].cols() != layers_[i].w.cols() ||
          tape.db[i].size() != layers_[i].b.size())
        throw std::invalid_argument("gradient tape shape mismatch at layer " + std::to_string(i));
  }

  std::vector<Layer> layers_;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<Vector> m_b_, v_b_;
  long step_ = 0;
};

}  // namespace drlpa
