#pragma once

// Fully connected regression network trained by full-batch Adam on mean
// squared error. Inputs are standardized and targets divided by a fixed
// output scale (255 for actuator commands) inside the model.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "robohead/error.hpp"

namespace robohead::learn {

enum class Activation { tanh, relu };

inline std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw InvalidArgument("unknown activation '" + s + "'");
}

struct MlpHyper {
  std::vector<int> hidden;  // widths; empty = linear model
  Activation activation = Activation::tanh;
  double learning_rate = 1e-2;
  double l2 = 0.0;
  int epochs = 2000;
  std::uint64_t seed = 0;

  std::string describe() const {
    std::ostringstream s;
    s << "hidden=[";
    for (std::size_t i = 0; i < hidden.size(); ++i) s << (i ? "," : "") << hidden[i];
    s << "] activation=" << to_string(activation) << " lr=" << learning_rate << " l2=" << l2 << " epochs=" << epochs
      << " seed=" << seed;
    return s.str();
  }
};

struct MlpModel {
  std::vector<Eigen::MatrixXd> weights;  // layer l: out x in
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::tanh;
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  double output_scale = 255.0;
  double clip_min = 0.0;
  double clip_max = 255.0;
  MlpHyper hyper;
  double final_loss = 0.0;

  Eigen::Index inputs() const { return weights.front().cols(); }
  Eigen::Index outputs() const { return weights.back().rows(); }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  Eigen::MatrixXd standardize(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    if (x.cols() != input_mean.size()) throw InvalidArgument("mlp: input dimension mismatch");
    return (x.rowwise() - input_mean.transpose()).array().rowwise() / input_scale.transpose().array();
  }

  /// Network output on the normalized scale for standardized inputs.
  Eigen::MatrixXd forward_normalized(const Eigen::Ref<const Eigen::MatrixXd>& xs) const {
    Eigen::MatrixXd h = xs;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      Eigen::MatrixXd z = (h * weights[l].transpose()).rowwise() + biases[l].transpose();
      if (l + 1 < weights.size())
        h = activation == Activation::tanh ? Eigen::MatrixXd(z.array().tanh()) : Eigen::MatrixXd(z.cwiseMax(0.0));
      else
        h = std::move(z);
    }
    return h;
  }

  /// Predictions rescaled to the output scale and clipped to [clip_min, clip_max].
  Eigen::MatrixXd predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    return (forward_normalized(standardize(x)) * output_scale).cwiseMax(clip_min).cwiseMin(clip_max);
  }
};

/// Builds the layer structure for `hyper` with seeded Glorot (tanh) or He
/// (relu) uniform weights and zero biases.
inline MlpModel mlp_init(Eigen::Index inputs, Eigen::Index outputs, const MlpHyper& hyper) {
  for (int w : hyper.hidden)
    if (w < 1) throw InvalidArgument("mlp: hidden widths must be >= 1");
  MlpModel m;
  m.activation = hyper.activation;
  m.hyper = hyper;
  m.input_mean = Eigen::VectorXd::Zero(inputs);
  m.input_scale = Eigen::VectorXd::Ones(inputs);
  std::mt19937_64 rng(hyper.seed);
  Eigen::Index prev = inputs;
  std::vector<Eigen::Index> sizes(hyper.hidden.begin(), hyper.hidden.end());
  sizes.push_back(outputs);
  for (auto out : sizes) {
    const double limit = hyper.activation == Activation::relu ? std::sqrt(6.0 / double(prev))
                                                              : std::sqrt(6.0 / double(prev + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd w(out, prev);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(out));
    prev = out;
  }
  return m;
}

inline Eigen::VectorXd mlp_parameters(const MlpModel& m) {
  Eigen::VectorXd p(m.parameter_count());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    p.segment(k, m.weights[l].size()) = m.weights[l].reshaped();
    k += m.weights[l].size();
    p.segment(k, m.biases[l].size()) = m.biases[l];
    k += m.biases[l].size();
  }
  return p;
}

inline void set_mlp_parameters(MlpModel& m, const Eigen::Ref<const Eigen::VectorXd>& p) {
  if (p.size() != m.parameter_count()) throw InvalidArgument("mlp: parameter vector size mismatch");
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    m.weights[l].reshaped() = p.segment(k, m.weights[l].size());
    k += m.weights[l].size();
    m.biases[l] = p.segment(k, m.biases[l].size());
    k += m.biases[l].size();
  }
}

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as mlp_parameters
};

/// L = 1/(2n) sum ||f(x) - y||^2 + l2/2 sum ||W||^2 (biases unpenalized),
/// on standardized inputs and normalized targets, with its backprop gradient.
inline LossGradient mlp_loss_gradient(const MlpModel& m, const Eigen::Ref<const Eigen::MatrixXd>& xs,
                                      const Eigen::Ref<const Eigen::MatrixXd>& yn, double l2) {
  const double n = double(xs.rows());
  const std::size_t layers = m.weights.size();
  std::vector<Eigen::MatrixXd> acts{xs};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (acts.back() * m.weights[l].transpose()).rowwise() + m.biases[l].transpose();
    pre.push_back(z);
    if (l + 1 < layers)
      acts.push_back(m.activation == Activation::tanh ? Eigen::MatrixXd(z.array().tanh()) : Eigen::MatrixXd(z.cwiseMax(0.0)));
    else
      acts.push_back(std::move(z));
  }
  const Eigen::MatrixXd err = acts.back() - yn;
  LossGradient out;
  out.loss = 0.5 * err.squaredNorm() / n;
  for (const auto& w : m.weights) out.loss += 0.5 * l2 * w.squaredNorm();

  std::vector<Eigen::MatrixXd> gw(layers);
  std::vector<Eigen::VectorXd> gb(layers);
  Eigen::MatrixXd delta = err / n;
  for (std::size_t l = layers; l-- > 0;) {
    gw[l] = delta.transpose() * acts[l] + l2 * m.weights[l];
    gb[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd back = delta * m.weights[l];
    if (m.activation == Activation::tanh)
      delta = back.array() * (1.0 - acts[l].array().square());
    else
      delta = back.array() * (pre[l - 1].array() > 0.0).cast<double>();
  }
  out.gradient.resize(m.parameter_count());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    out.gradient.segment(k, gw[l].size()) = gw[l].reshaped();
    k += gw[l].size();
    out.gradient.segment(k, gb[l].size()) = gb[l];
    k += gb[l].size();
  }
  return out;
}

/// Trains on raw inputs `x` and targets `y` (on the output scale, e.g. 0-255).
inline MlpModel mlp_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y,
                        const MlpHyper& hyper, double output_scale = 255.0) {
  if (x.rows() != y.rows() || x.rows() < 1) throw InvalidArgument("mlp_fit: X and Y row counts differ or are empty");
  if (hyper.epochs < 1 || !(hyper.learning_rate > 0.0) || !(hyper.l2 >= 0.0))
    throw InvalidArgument("mlp_fit: invalid hyperparameters " + hyper.describe());
  MlpModel m = mlp_init(x.cols(), y.cols(), hyper);
  m.output_scale = output_scale;
  m.clip_max = output_scale;
  m.input_mean = x.colwise().mean().transpose();
  Eigen::VectorXd sd = ((x.rowwise() - m.input_mean.transpose()).array().square().colwise().sum() / double(x.rows()))
                           .sqrt()
                           .matrix()
                           .transpose();
  m.input_scale = sd.unaryExpr([](double s) { return s > 1e-12 ? s : 1.0; });

  const Eigen::MatrixXd xs = m.standardize(x);
  const Eigen::MatrixXd yn = y / output_scale;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::VectorXd p = mlp_parameters(m);
  Eigen::VectorXd mom = Eigen::VectorXd::Zero(p.size()), vel = Eigen::VectorXd::Zero(p.size());
  double b1t = 1.0, b2t = 1.0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    auto lg = mlp_loss_gradient(m, xs, yn, hyper.l2);
    if (!std::isfinite(lg.loss) || !lg.gradient.allFinite())
      throw TrainingDiverged("MLP training diverged at epoch " + std::to_string(epoch) + " with " + hyper.describe());
    b1t *= beta1;
    b2t *= beta2;
    mom = beta1 * mom + (1 - beta1) * lg.gradient;
    vel = beta2 * vel + (1 - beta2) * lg.gradient.cwiseAbs2();
    p -= hyper.learning_rate * ((mom / (1 - b1t)).array() / ((vel / (1 - b2t)).cwiseSqrt().array() + eps)).matrix();
    set_mlp_parameters(m, p);
  }
  m.final_loss = mlp_loss_gradient(m, xs, yn, hyper.l2).loss;
  if (!std::isfinite(m.final_loss))
    throw TrainingDiverged("MLP training diverged with " + hyper.describe());
  return m;
}

}  // namespace robohead::learn
