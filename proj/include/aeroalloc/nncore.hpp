#pragma once

// Small dense feed-forward networks with hand-written reverse mode.
//
// Samples are stored column-wise: a batch of N inputs of width d is a d x N
// matrix. A single sample is a batch of one.

#include "aeroalloc/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace aeroalloc::nn {

enum class Activation { Tanh, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Layer {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;    // out
  Activation activation = Activation::Identity;

  Eigen::Index in_width() const { return weight.cols(); }
  Eigen::Index out_width() const { return weight.rows(); }
};

/// Per-parameter gradient buffers laid out like the owning network.
template <typename Scalar>
struct GradientTape {
  std::vector<Matrix<Scalar>> weight;
  std::vector<Vector<Scalar>> bias;

  std::size_t size() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weight.size(); ++l) n += weight[l].size() + bias[l].size();
    return n;
  }

  /// Flat view in the same order as Network::parameter().
  Scalar value(std::size_t index) const {
    for (std::size_t l = 0; l < weight.size(); ++l) {
      const auto nw = static_cast<std::size_t>(weight[l].size());
      if (index < nw) {
        return weight[l](static_cast<Eigen::Index>(index / weight[l].cols()),
                         static_cast<Eigen::Index>(index % weight[l].cols()));
      }
      index -= nw;
      const auto nb = static_cast<std::size_t>(bias[l].size());
      if (index < nb) return bias[l](static_cast<Eigen::Index>(index));
      index -= nb;
    }
    throw DimensionError("gradient index out of range");
  }

  bool all_zero() const {
    for (std::size_t l = 0; l < weight.size(); ++l) {
      if (!weight[l].isZero(0) || !bias[l].isZero(0)) return false;
    }
    return true;
  }

  GradientTape& operator+=(const GradientTape& other) {
    if (other.weight.size() != weight.size()) throw DimensionError("gradient tape layout mismatch");
    for (std::size_t l = 0; l < weight.size(); ++l) {
      weight[l] += other.weight[l];
      bias[l] += other.bias[l];
    }
    return *this;
  }
};

template <typename Scalar>
class Network {
 public:
  using MatrixType = Matrix<Scalar>;
  using VectorType = Vector<Scalar>;

  /// Layer inputs recorded by forward() for a later backward().
  struct Trace {
    std::vector<MatrixType> activations;  // activations[0] is the input batch
  };

  Network() = default;

  explicit Network(std::vector<Layer<Scalar>> layers) : layers_(std::move(layers)) { validate(); }

  /// Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static Network glorot(std::span<const int> widths, std::uint64_t seed,
                        Activation hidden = Activation::Tanh,
                        Activation output = Activation::Identity) {
    check_widths(widths);
    std::mt19937_64 rng(seed);
    std::vector<Layer<Scalar>> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const int fan_in = widths[l];
      const int fan_out = widths[l + 1];
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      Layer<Scalar> layer;
      layer.weight.resize(fan_out, fan_in);
      for (Eigen::Index r = 0; r < fan_out; ++r)
        for (Eigen::Index c = 0; c < fan_in; ++c) layer.weight(r, c) = static_cast<Scalar>(dist(rng));
      layer.bias = VectorType::Zero(fan_out);
      layer.activation = (l + 2 == widths.size()) ? output : hidden;
      layers.push_back(std::move(layer));
    }
    return Network(std::move(layers));
  }

  static Network zeros(std::span<const int> widths, Activation hidden = Activation::Tanh,
                       Activation output = Activation::Identity) {
    check_widths(widths);
    std::vector<Layer<Scalar>> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      Layer<Scalar> layer;
      layer.weight = MatrixType::Zero(widths[l + 1], widths[l]);
      layer.bias = VectorType::Zero(widths[l + 1]);
      layer.activation = (l + 2 == widths.size()) ? output : hidden;
      layers.push_back(std::move(layer));
    }
    return Network(std::move(layers));
  }

  bool empty() const { return layers_.empty(); }
  std::size_t depth() const { return layers_.size(); }
  Eigen::Index input_width() const { return layers_.empty() ? 0 : layers_.front().in_width(); }
  Eigen::Index output_width() const { return layers_.empty() ? 0 : layers_.back().out_width(); }
  const std::vector<Layer<Scalar>>& layers() const { return layers_; }
  std::vector<Layer<Scalar>>& mutable_layers() { return layers_; }

  std::vector<int> widths() const {
    std::vector<int> w;
    if (layers_.empty()) return w;
    w.push_back(static_cast<int>(input_width()));
    for (const auto& layer : layers_) w.push_back(static_cast<int>(layer.out_width()));
    return w;
  }

  VectorType forward(const VectorType& x) const {
    if (x.size() != input_width()) throw DimensionError("network input width mismatch");
    VectorType a = x;
    for (const auto& layer : layers_) {
      VectorType z = layer.weight * a + layer.bias;
      a = activate(z, layer.activation);
    }
    return a;
  }

  MatrixType forward(const MatrixType& batch, Trace* trace = nullptr) const {
    if (batch.rows() != input_width()) throw DimensionError("network input width mismatch");
    if (trace != nullptr) {
      trace->activations.clear();
      trace->activations.reserve(layers_.size() + 1);
      trace->activations.push_back(batch);
    }
    MatrixType a = batch;
    for (const auto& layer : layers_) {
      MatrixType z = layer.weight * a;
      z.colwise() += layer.bias;
      a = activate(z, layer.activation);
      if (trace != nullptr) trace->activations.push_back(a);
    }
    return a;
  }

  /// Gradients of sum(upstream .* output) with respect to every parameter.
  /// When `input_grad` is non-null it receives the gradient with respect to
  /// the input batch.
  GradientTape<Scalar> backward(const Trace& trace, const MatrixType& upstream,
                                MatrixType* input_grad = nullptr) const {
    if (trace.activations.size() != layers_.size() + 1)
      throw DimensionError("trace does not belong to this network");
    const auto& out = trace.activations.back();
    if (upstream.rows() != out.rows() || upstream.cols() != out.cols())
      throw DimensionError("upstream gradient shape mismatch");

    GradientTape<Scalar> tape = zero_tape();
    MatrixType g = upstream;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const auto& layer = layers_[k];
      const auto& a_out = trace.activations[k + 1];
      if (layer.activation == Activation::Tanh) {
        g.array() *= (Scalar(1) - a_out.array().square());
      }
      tape.weight[k].noalias() = g * trace.activations[k].transpose();
      tape.bias[k] = g.rowwise().sum();
      if (k > 0 || input_grad != nullptr) {
        MatrixType next = layer.weight.transpose() * g;
        g = std::move(next);
      }
    }
    if (input_grad != nullptr) *input_grad = std::move(g);
    return tape;
  }

  GradientTape<Scalar> backward(const VectorType& x, const VectorType& upstream) const {
    Trace trace;
    forward(MatrixType(x), &trace);
    return backward(trace, MatrixType(upstream));
  }

  GradientTape<Scalar> zero_tape() const {
    GradientTape<Scalar> tape;
    for (const auto& layer : layers_) {
      tape.weight.push_back(MatrixType::Zero(layer.weight.rows(), layer.weight.cols()));
      tape.bias.push_back(VectorType::Zero(layer.bias.size()));
    }
    return tape;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
  }

  /// Flat parameter access: layer by layer, row-major weight then bias.
  Scalar& parameter(std::size_t index) {
    for (auto& layer : layers_) {
      const auto nw = static_cast<std::size_t>(layer.weight.size());
      if (index < nw) {
        return layer.weight(static_cast<Eigen::Index>(index / layer.weight.cols()),
                            static_cast<Eigen::Index>(index % layer.weight.cols()));
      }
      index -= nw;
      const auto nb = static_cast<std::size_t>(layer.bias.size());
      if (index < nb) return layer.bias(static_cast<Eigen::Index>(index));
      index -= nb;
    }
    throw DimensionError("parameter index out of range");
  }

  Scalar parameter(std::size_t index) const { return const_cast<Network*>(this)->parameter(index); }

  bool all_finite() const {
    for (const auto& layer : layers_) {
      if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    }
    return true;
  }

  bool operator==(const Network& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& a = layers_[l];
      const auto& b = other.layers_[l];
      if (a.activation != b.activation || a.weight.rows() != b.weight.rows() ||
          a.weight.cols() != b.weight.cols() || a.weight != b.weight || a.bias != b.bias)
        return false;
    }
    return true;
  }

 private:
  static void check_widths(std::span<const int> widths) {
    if (widths.size() < 2) throw DimensionError("a network needs at least an input and an output width");
    for (int w : widths) {
      if (w <= 0) throw DimensionError("layer widths must be positive");
    }
  }

  static MatrixType activate(const MatrixType& z, Activation act) {
    if (act == Activation::Tanh) return z.array().tanh().matrix();
    return z;
  }

  void validate() const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.bias.size() != layer.weight.rows()) throw DimensionError("bias width does not match weight rows");
      if (l > 0 && layers_[l - 1].out_width() != layer.in_width())
        throw DimensionError("consecutive layer widths do not chain");
    }
    if (!all_finite()) throw InvalidParameter("network parameters must be finite");
  }

  std::vector<Layer<Scalar>> layers_;
};

/// Adaptive moment estimation with bias-corrected moments.
template <typename Scalar>
class Adam {
 public:
  struct Options {
    Scalar learning_rate = Scalar(1e-3);
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar epsilon = Scalar(1e-8);
  };

  Adam() = default;
  explicit Adam(const Network<Scalar>& net) : Adam(net, Options{}) {}
  Adam(const Network<Scalar>& net, Options options)
      : options_(options), first_(net.zero_tape()), second_(net.zero_tape()) {}

  std::int64_t steps() const { return steps_; }
  const Options& options() const { return options_; }
  void set_learning_rate(Scalar lr) { options_.learning_rate = lr; }

  void step(Network<Scalar>& net, const GradientTape<Scalar>& grad) {
    auto& layers = net.mutable_layers();
    if (grad.weight.size() != layers.size() || first_.weight.size() != layers.size())
      throw DimensionError("optimizer state does not match network layout");
    ++steps_;
    const Scalar c1 = Scalar(1) - std::pow(options_.beta1, static_cast<Scalar>(steps_));
    const Scalar c2 = Scalar(1) - std::pow(options_.beta2, static_cast<Scalar>(steps_));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (grad.weight[l].rows() != layers[l].weight.rows() || grad.weight[l].cols() != layers[l].weight.cols() ||
          grad.bias[l].size() != layers[l].bias.size())
        throw DimensionError("gradient shape mismatch");
      update(layers[l].weight, first_.weight[l], second_.weight[l], grad.weight[l], c1, c2);
      update(layers[l].bias, first_.bias[l], second_.bias[l], grad.bias[l], c1, c2);
    }
  }

 private:
  template <typename Param, typename Grad>
  void update(Param& param, Param& m, Param& v, const Grad& g, Scalar c1, Scalar c2) const {
    m = options_.beta1 * m + (Scalar(1) - options_.beta1) * g;
    v = options_.beta2 * v + (Scalar(1) - options_.beta2) * g.cwiseAbs2();
    param.array() -= options_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + options_.epsilon);
  }

  Options options_{};
  GradientTape<Scalar> first_;
  GradientTape<Scalar> second_;
  std::int64_t steps_ = 0;
};

/// Huber penalty: e^2/2 inside the threshold, delta*(|e| - delta/2) outside.
template <typename Scalar>
Scalar huber(Scalar e, Scalar delta) {
  if (!(delta > Scalar(0))) throw InvalidParameter("huber threshold must be positive");
  const Scalar a = std::abs(e);
  return a <= delta ? Scalar(0.5) * e * e : delta * (a - Scalar(0.5) * delta);
}

template <typename Scalar>
Scalar huber_derivative(Scalar e, Scalar delta) {
  if (!(delta > Scalar(0))) throw InvalidParameter("huber threshold must be positive");
  if (e > delta) return delta;
  if (e < -delta) return -delta;
  return e;
}

}  // namespace aeroalloc::nn
