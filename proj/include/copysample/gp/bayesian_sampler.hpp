#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "copysample/gp/gaussian_process.hpp"
#include "copysample/samplers/common.hpp"

namespace copysample {

struct AcquisitionParams {
  double tau = 10.0;

  void validate() const {
    if (!(tau >= 0.0)) throw PreconditionError("AcquisitionParams: tau must be >= 0");
  }
};

struct FastBayesParams {
  std::size_t cap = 1000;      // b: max posterior support
  double slowness = 20.0;      // sf
  std::size_t init_count = 10; // uniform initial samples
  int local_iters = 10;        // acquisition ascent rounds

  void validate() const {
    if (init_count < 1 || cap < init_count) throw PreconditionError("FastBayesParams: need cap >= init_count >= 1");
    if (!(slowness >= 1.0)) throw PreconditionError("FastBayesParams: slowness must be >= 1");
    if (local_iters < 0) throw PreconditionError("FastBayesParams: local_iters must be >= 0");
  }
};

/// Nearest integer, halves rounded up.
inline long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

/// Maps a posterior mean to a class: nearest integer, clamped to [0, k).
inline ClassLabel round_to_class(double mu, int k) {
  if (k < 2) throw PreconditionError("round_to_class: k must be >= 2");
  return ClassLabel(static_cast<int>(std::clamp<long>(round_half_up(mu), 0, k - 1)));
}

/// var * (1 + tau * f^2 (1 - f)^2) with f the fractional part of the mean.
///
/// The second factor peaks halfway between integers, where the rounded
/// posterior mean switches class.
inline double acquisition_value(double mean, double var, const AcquisitionParams& p) {
  const double f = mean - std::floor(mean);
  const double g = f * (1.0 - f);
  return var * (1.0 + p.tau * g * g);
}

inline double acquisition(const GPPosterior& gp, const Point& z, const AcquisitionParams& p) {
  const auto [mu, var] = gp.mean_var(z);
  return acquisition_value(mu, var, p);
}

inline Eigen::VectorXd acquisition_batch(const GPPosterior& gp, const Eigen::MatrixXd& points, const AcquisitionParams& p) {
  Eigen::VectorXd mu, var;
  gp.mean_var(points, mu, var);
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = acquisition_value(mu[i], var[i], p);
  return out;
}

/// Derivative-free bounded ascent of the acquisition from z0.
///
/// Each round probes +-step along every axis and along one random unit
/// direction, all clipped to the hypercube. An improving probe is taken at the
/// same step; otherwise the step halves. The step never grows, so the search
/// stays in a neighbourhood of z0 of radius at most iters * initial_step.
/// Only strict improvements move the point, so the result never scores below z0.
inline Point maximize_acquisition(const GPPosterior& gp, const Point& z0, int iters, const AcquisitionParams& p,
                                  RandomSource& rng, double initial_step = 0.05) {
  const int d = static_cast<int>(z0.size());
  const SampleSpace space(d);
  Point best = space.clip(z0);
  double best_value = acquisition(gp, best, p);
  double step = initial_step;
  Eigen::MatrixXd probes(d, 2 * d + 2);
  for (int it = 0; it < iters; ++it) {
    Point dir = rng.normal_vector(d);
    dir /= std::max(dir.norm(), 1e-300);
    for (int i = 0; i < d; ++i) {
      Point up = best, down = best;
      up[i] += step;
      down[i] -= step;
      probes.col(2 * i) = space.clip(up);
      probes.col(2 * i + 1) = space.clip(down);
    }
    probes.col(2 * d) = space.clip(best + step * dir);
    probes.col(2 * d + 1) = space.clip(best - step * dir);
    const Eigen::VectorXd values = acquisition_batch(gp, probes, p);
    Eigen::Index arg = 0;
    const double top = values.maxCoeff(&arg);
    if (top > best_value) {
      best_value = top;
      best = probes.col(arg);
    } else {
      step *= 0.5;
    }
  }
  return best;
}

namespace bayes_detail {

inline std::optional<GPPosterior> try_fit(std::span<const LabeledSample> support, const SEKernel& kern) {
  try {
    return GPPosterior::fit(support, kern);
  } catch (const FitError&) {
    return std::nullopt;
  }
}

inline void record_params(SyntheticDataset& ds, const SEKernel& kern, const AcquisitionParams& acq) {
  ds.metadata["length_scale"] = csv_detail::format_double(kern.length_scale);
  ds.metadata["variance"] = csv_detail::format_double(kern.variance);
  ds.metadata["tau"] = csv_detail::format_double(acq.tau);
}

}  // namespace bayes_detail

/// Fast Bayesian sampling.
///
/// After `init_count` uniform samples, repeats: condition the GP on at most
/// `cap` samples (a fresh uniform subset once the set outgrows the cap), then
/// add a batch of max(1, round(|support| / slowness)) points, each the local
/// acquisition maximum from an independent uniform start, without refitting.
/// The max(1, .) floor keeps the loop moving when support/slowness rounds to 0.
inline SyntheticDataset fast_bayesian_sampler(std::size_t n, Oracle& oracle, const FastBayesParams& params,
                                              const SEKernel& kern, const AcquisitionParams& acq, RandomSource& rng,
                                              ProgressFn progress = {}) {
  params.validate();
  acq.validate();
  require_budget(n, params.init_count, "fast_bayesian_sampler");
  DatasetBuilder out(oracle, "bayesian", rng.seed(), std::move(progress));
  const SampleSpace space(oracle.dim());
  for (std::size_t i = 0; i < params.init_count; ++i) out.add_query(uniform_sample(space, rng));

  std::size_t fits = 0, fallback_batches = 0;
  std::vector<LabeledSample> subset;
  while (out.size() < n) {
    const auto& all = out.dataset().samples;
    std::span<const LabeledSample> support(all);
    if (all.size() > params.cap) {
      subset.clear();
      for (std::size_t idx : rng.subset(all.size(), params.cap)) subset.push_back(all[idx]);
      support = subset;
    }
    const std::size_t support_size = support.size();
    auto gp = bayes_detail::try_fit(support, kern);
    ++fits;
    const auto batch = static_cast<std::size_t>(
        std::max<long>(1, round_half_up(static_cast<double>(support_size) / params.slowness)));
    if (!gp) ++fallback_batches;
    for (std::size_t t = 0; t < batch && out.size() < n; ++t) {
      Point z0 = uniform_sample(space, rng);
      Point z = gp ? maximize_acquisition(*gp, z0, params.local_iters, acq, rng) : std::move(z0);
      out.add_query(z);
    }
  }
  auto& ds = out.dataset();
  bayes_detail::record_params(ds, kern, acq);
  ds.metadata["cap"] = std::to_string(params.cap);
  ds.metadata["slowness"] = csv_detail::format_double(params.slowness);
  ds.metadata["local_iters"] = std::to_string(params.local_iters);
  ds.metadata["posterior_fits"] = std::to_string(fits);
  ds.metadata["fallback_batches"] = std::to_string(fallback_batches);
  return out.finish();
}

inline SyntheticDataset fast_bayesian_sampler(std::size_t n, Oracle& oracle, RandomSource& rng, ProgressFn progress = {}) {
  return fast_bayesian_sampler(n, oracle, FastBayesParams{}, SEKernel::defaults(oracle.dim(), oracle.num_classes()),
                               AcquisitionParams{}, rng, std::move(progress));
}

/// Largest N the fully re-optimized reference sampler accepts.
inline constexpr std::size_t reference_bayesian_limit = 500;

/// Re-optimized Bayesian sampling: refit after every sample and keep the best
/// of `restarts` local ascents. Cubic cost per sample, so test-scale only.
inline SyntheticDataset reference_bayesian_sampler(std::size_t n, Oracle& oracle, const SEKernel& kern,
                                                   const AcquisitionParams& acq, RandomSource& rng,
                                                   std::size_t init_count = 10, int restarts = 10,
                                                   int local_iters = 10) {
  if (n > reference_bayesian_limit) {
    throw RefusalError("reference_bayesian_sampler: N=" + std::to_string(n) + " exceeds the test-scale limit of " +
                       std::to_string(reference_bayesian_limit));
  }
  acq.validate();
  require_budget(n, init_count, "reference_bayesian_sampler");
  DatasetBuilder out(oracle, "bayesian-reference", rng.seed());
  const SampleSpace space(oracle.dim());
  for (std::size_t i = 0; i < init_count; ++i) out.add_query(uniform_sample(space, rng));
  while (out.size() < n) {
    const GPPosterior gp = GPPosterior::fit(out.dataset().samples, kern);
    Point best;
    double best_value = -1.0;
    for (int r = 0; r < restarts; ++r) {
      Point z = maximize_acquisition(gp, uniform_sample(space, rng), local_iters, acq, rng);
      const double v = acquisition(gp, z, acq);
      if (v > best_value) {
        best_value = v;
        best = std::move(z);
      }
    }
    out.add_query(best);
  }
  bayes_detail::record_params(out.dataset(), kern, acq);
  return out.finish();
}

}  // namespace copysample
