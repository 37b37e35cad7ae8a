#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "copysample/core/random.hpp"
#include "copysample/core/types.hpp"

namespace copysample {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Column-wise softmax of a logits matrix (classes x batch), max-shifted.
inline Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.rowwise() - logits.colwise().maxCoeff();
  p = p.array().exp();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

/// Feed-forward classifier: ReLU hidden layers, softmax output, mean cross-entropy loss.
///
/// With no hidden layers this is multinomial logistic regression.
class SoftmaxNetwork {
 public:
  SoftmaxNetwork() = default;

  SoftmaxNetwork(int input_dim, std::vector<int> hidden, int num_classes, RandomSource& rng)
      : input_dim_(input_dim), num_classes_(num_classes) {
    int fan_in = input_dim;
    hidden.push_back(num_classes);
    for (std::size_t l = 0; l < hidden.size(); ++l) {
      const int fan_out = hidden[l];
      const bool output = l + 1 == hidden.size();
      // He init for ReLU layers, Glorot for the softmax layer.
      const double sd = output ? std::sqrt(2.0 / (fan_in + fan_out)) : std::sqrt(2.0 / fan_in);
      DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = sd * rng.normal();
      layers_.push_back(std::move(layer));
      fan_in = fan_out;
    }
  }

  SoftmaxNetwork(int input_dim, int num_classes, std::vector<DenseLayer> layers)
      : input_dim_(input_dim), num_classes_(num_classes), layers_(std::move(layers)) {}

  int input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Class probabilities for a batch given as columns (d x n).
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& inputs) const {
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = (layers_[l].weight * a).colwise() + layers_[l].bias;
      a = l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : softmax_columns(z);
    }
    return a;
  }

  Eigen::VectorXd probabilities(const Point& z) const { return probabilities(Eigen::MatrixXd(z)).col(0); }

  ClassLabel predict(const Point& z) const {
    Eigen::Index best = 0;
    probabilities(z).maxCoeff(&best);
    return ClassLabel(static_cast<int>(best));
  }

  /// Gradient of the class-c probability with respect to the input.
  Point probability_gradient(const Point& z, int c) const {
    std::vector<Eigen::VectorXd> pre;
    Eigen::VectorXd a = z;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::VectorXd s = layers_[l].weight * a + layers_[l].bias;
      pre.push_back(s);
      a = l + 1 < layers_.size() ? Eigen::VectorXd(s.cwiseMax(0.0)) : Eigen::VectorXd(softmax_columns(s).col(0));
    }
    // d p_c / d logits = p_c (e_c - p)
    Eigen::VectorXd delta = -a[c] * a;
    delta[c] += a[c];
    for (std::size_t l = layers_.size(); l-- > 0;) {
      Eigen::VectorXd back = layers_[l].weight.transpose() * delta;
      if (l == 0) return back;
      delta = back.array() * (pre[l - 1].array() > 0.0).cast<double>();
    }
    return delta;
  }

  /// Mean cross-entropy over a batch and its gradient, one entry per layer.
  double loss_gradient(const Eigen::MatrixXd& inputs, const std::vector<int>& labels,
                       std::vector<DenseLayer>* grads) const {
    const auto n = static_cast<double>(inputs.cols());
    std::vector<Eigen::MatrixXd> acts{inputs};
    std::vector<Eigen::MatrixXd> pre;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = (layers_[l].weight * acts.back()).colwise() + layers_[l].bias;
      pre.push_back(z);
      acts.push_back(l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : softmax_columns(z));
    }
    const Eigen::MatrixXd& p = acts.back();
    double loss = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) loss -= std::log(std::max(p(labels[static_cast<std::size_t>(j)], j), 1e-300));
    loss /= n;
    if (!grads) return loss;

    grads->resize(layers_.size());
    Eigen::MatrixXd delta = p;
    for (Eigen::Index j = 0; j < p.cols(); ++j) delta(labels[static_cast<std::size_t>(j)], j) -= 1.0;
    delta /= n;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      (*grads)[l].weight = delta * acts[l].transpose();
      (*grads)[l].bias = delta.rowwise().sum();
      if (l == 0) break;
      delta = (layers_[l].weight.transpose() * delta).array() * (pre[l - 1].array() > 0.0).cast<double>();
    }
    return loss;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  Eigen::VectorXd flat_parameters() const { return flatten(layers_); }

  void set_flat_parameters(const Eigen::VectorXd& theta) {
    Eigen::Index at = 0;
    for (auto& l : layers_) {
      l.weight = Eigen::Map<const Eigen::MatrixXd>(theta.data() + at, l.weight.rows(), l.weight.cols());
      at += l.weight.size();
      l.bias = theta.segment(at, l.bias.size());
      at += l.bias.size();
    }
  }

  static Eigen::VectorXd flatten(const std::vector<DenseLayer>& layers) {
    Eigen::Index total = 0;
    for (const auto& l : layers) total += l.weight.size() + l.bias.size();
    Eigen::VectorXd out(total);
    Eigen::Index at = 0;
    for (const auto& l : layers) {
      out.segment(at, l.weight.size()) = Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size());
      at += l.weight.size();
      out.segment(at, l.bias.size()) = l.bias;
      at += l.bias.size();
    }
    return out;
  }

 private:
  int input_dim_ = 0;
  int num_classes_ = 0;
  std::vector<DenseLayer> layers_;
};

struct AdamSettings {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 200;
  int batch_size = 64;
};

struct FitStats {
  int epochs_run = 0;
  double final_loss = 0.0;
};

/// Minibatch Adam on the flat parameter vector. Throws TrainingError on a non-finite loss.
inline FitStats fit_adam(SoftmaxNetwork& net, const Eigen::MatrixXd& inputs, const std::vector<int>& labels,
                         const AdamSettings& s, RandomSource& rng) {
  const auto n = static_cast<std::size_t>(inputs.cols());
  Eigen::VectorXd theta = net.flat_parameters();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<DenseLayer> grads;
  std::vector<int> batch_labels;
  Eigen::MatrixXd batch;
  std::int64_t t = 0;
  FitStats stats;
  const std::size_t bs = static_cast<std::size_t>(std::max(1, s.batch_size));

  for (int epoch = 0; epoch < s.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t count = std::min(bs, n - start);
      batch.resize(inputs.rows(), static_cast<Eigen::Index>(count));
      batch_labels.resize(count);
      for (std::size_t j = 0; j < count; ++j) {
        batch.col(static_cast<Eigen::Index>(j)) = inputs.col(static_cast<Eigen::Index>(order[start + j]));
        batch_labels[j] = labels[order[start + j]];
      }
      const double loss = net.loss_gradient(batch, batch_labels, &grads);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch offset " +
                            std::to_string(start));
      }
      epoch_loss += loss * static_cast<double>(count);
      const Eigen::VectorXd g = SoftmaxNetwork::flatten(grads);
      ++t;
      m = s.beta1 * m + (1.0 - s.beta1) * g;
      v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
      const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(t));
      theta.array() -= s.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + s.epsilon);
      net.set_flat_parameters(theta);
    }
    stats.epochs_run = epoch + 1;
    stats.final_loss = epoch_loss / static_cast<double>(n);
    if (!theta.allFinite()) throw TrainingError("parameters diverged at epoch " + std::to_string(epoch));
  }
  return stats;
}

}  // namespace copysample
