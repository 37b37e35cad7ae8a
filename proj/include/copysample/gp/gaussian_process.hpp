#pragma once

#include <cmath>
#include <span>
#include <utility>

#include "copysample/core/types.hpp"

namespace copysample {

/// Squared exponential covariance sigma^2 * exp(-|z - z'|^2 / (2 l^2)).
struct SEKernel {
  double length_scale = 1.0;
  double variance = 1.0;

  /// l = 0.5 sqrt(d), sigma^2 = 0.25 k^2.
  static SEKernel defaults(int dim, int num_classes) {
    return {0.5 * std::sqrt(static_cast<double>(dim)), 0.25 * static_cast<double>(num_classes) * num_classes};
  }

  void validate() const {
    if (!(length_scale > 0.0) || !(variance > 0.0)) throw PreconditionError("SEKernel: l and sigma^2 must be positive");
  }

  template <class A, class B>
  double operator()(const Eigen::MatrixBase<A>& z, const Eigen::MatrixBase<B>& z2) const {
    return variance * std::exp(-(z - z2).squaredNorm() / (2.0 * length_scale * length_scale));
  }
};

inline double kernel_eval(const SEKernel& kern, const Point& z, const Point& z2) {
  if (z.size() != z2.size()) throw PreconditionError("kernel_eval: dimension mismatch");
  return kern(z, z2);
}

/// Zero-mean GP conditioned on labelled points, class index used as the regression target.
///
/// Stores the Cholesky factor of K + jitter*I. The jitter starts at
/// 1e-8*sigma^2 and doubles on factorization failure up to 1e-4*sigma^2.
/// Immutable after fitting; evaluation is safe from several threads.
class GPPosterior {
 public:
  static constexpr double initial_jitter_ratio = 1e-8;
  static constexpr double max_jitter_ratio = 1e-4;

  /// The unconditioned prior.
  static GPPosterior prior(const SEKernel& kern, int dim) {
    kern.validate();
    GPPosterior gp;
    gp.kern_ = kern;
    gp.support_.resize(dim, 0);
    return gp;
  }

  static GPPosterior fit(std::span<const LabeledSample> samples, const SEKernel& kern) {
    return fit(samples, kern, initial_jitter_ratio * kern.variance);
  }

  static GPPosterior fit(std::span<const LabeledSample> samples, const SEKernel& kern, double jitter) {
    kern.validate();
    if (samples.empty()) throw PreconditionError("posterior_fit: need at least one sample");
    if (!(jitter > 0.0)) throw PreconditionError("posterior_fit: jitter must be positive");
    const auto n = static_cast<Eigen::Index>(samples.size());
    const auto d = samples.front().point.size();
    GPPosterior gp;
    gp.kern_ = kern;
    gp.support_.resize(d, n);
    gp.targets_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      require_dim(samples[static_cast<std::size_t>(i)].point, static_cast<int>(d), "posterior_fit");
      gp.support_.col(i) = samples[static_cast<std::size_t>(i)].point;
      gp.targets_[i] = static_cast<double>(samples[static_cast<std::size_t>(i)].label.value);
    }
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      gram(j, j) = kern.variance;
      for (Eigen::Index i = j + 1; i < n; ++i) gram(i, j) = gram(j, i) = kern(gp.support_.col(i), gp.support_.col(j));
    }
    const double limit = max_jitter_ratio * kern.variance * (1.0 + 1e-12);
    for (double j = jitter; j <= limit || j == jitter; j *= 2.0) {
      Eigen::MatrixXd a = gram;
      a.diagonal().array() += j;
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) continue;
      Eigen::MatrixXd lower = llt.matrixL();
      if (!(lower.diagonal().minCoeff() > 0.0) || !lower.allFinite()) continue;
      gp.lower_ = std::move(lower);
      gp.jitter_ = j;
      gp.alpha_ = gp.solve(gp.targets_);
      // Residuals in extended precision recover digits lost to conditioning.
      for (int round = 0; round < 2; ++round) {
        Eigen::VectorXd residual(n);
        for (Eigen::Index r = 0; r < n; ++r) {
          long double acc = static_cast<long double>(gp.targets_[r]) - static_cast<long double>(j) * gp.alpha_[r];
          for (Eigen::Index c = 0; c < n; ++c) acc -= static_cast<long double>(gram(r, c)) * gp.alpha_[c];
          residual[r] = static_cast<double>(acc);
        }
        gp.alpha_ += gp.solve(residual);
      }
      return gp;
    }
    throw FitError("posterior_fit: kernel matrix not positive definite with jitter up to " + std::to_string(limit));
  }

  const SEKernel& kernel() const { return kern_; }
  int dim() const { return static_cast<int>(support_.rows()); }
  std::size_t support_size() const { return static_cast<std::size_t>(support_.cols()); }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& lower_factor() const { return lower_; }
  const Eigen::MatrixXd& support() const { return support_; }
  const Eigen::VectorXd& targets() const { return targets_; }

  /// Posterior mean and variance at the columns of `points` (d x m). Variance is clamped at 0.
  void mean_var(const Eigen::MatrixXd& points, Eigen::VectorXd& mean, Eigen::VectorXd& var) const {
    const Eigen::Index m = points.cols();
    const Eigen::Index n = support_.cols();
    if (n == 0) {
      mean = Eigen::VectorXd::Zero(m);
      var = Eigen::VectorXd::Constant(m, kern_.variance);
      return;
    }
    Eigen::MatrixXd cross(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) cross(i, j) = kern_(support_.col(i), points.col(j));
    mean = cross.transpose() * alpha_;
    lower_.triangularView<Eigen::Lower>().solveInPlace(cross);
    var = (kern_.variance - cross.colwise().squaredNorm().array()).cwiseMax(0.0).matrix().transpose();
  }

  std::pair<double, double> mean_var(const Point& z) const {
    require_dim(z, dim(), "posterior_mean_var");
    Eigen::VectorXd mu, var;
    mean_var(Eigen::MatrixXd(z), mu, var);
    return {mu[0], var[0]};
  }

 private:
  Eigen::VectorXd solve(Eigen::VectorXd rhs) const {
    lower_.triangularView<Eigen::Lower>().solveInPlace(rhs);
    lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(rhs);
    return rhs;
  }

  SEKernel kern_;
  Eigen::MatrixXd support_;  // d x n
  Eigen::VectorXd targets_;
  Eigen::MatrixXd lower_;
  Eigen::VectorXd alpha_;    // (K + jitter I)^-1 y
  double jitter_ = 0.0;
};

inline GPPosterior posterior_fit(std::span<const LabeledSample> samples, const SEKernel& kern) {
  return GPPosterior::fit(samples, kern);
}

inline std::pair<double, double> posterior_mean_var(const GPPosterior& gp, const Point& z) { return gp.mean_var(z); }

}  // namespace copysample
