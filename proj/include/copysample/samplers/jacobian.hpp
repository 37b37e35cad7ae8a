#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "copysample/copies/network.hpp"
#include "copysample/samplers/common.hpp"

namespace copysample {

struct JacobianParams {
  int refits = 0;           // substitute refits, at most
  int seeds_per_refit = 50; // uniform seeds
  double step = 0.05;       // augmentation step
  int rounds = 5;           // augmentation rounds per refit
  std::size_t fit_cap = 256;  // max samples per substitute fit

  static JacobianParams for_budget(std::size_t n) {
    JacobianParams p;
    p.refits = static_cast<int>(std::min<long>(100, std::lround(5.0 + static_cast<double>(n) / 4.0)));
    return p;
  }

  void validate() const {
    if (refits < 1 || seeds_per_refit < 1 || rounds < 1 || fit_cap < 1 || !(step > 0.0)) {
      throw PreconditionError("JacobianParams: all settings must be positive");
    }
  }
};

/// One augmentation: the parent's index in the dataset and the unclipped offset applied to it.
struct JacobianStep {
  std::size_t parent = 0;
  std::size_t child = 0;
  Point offset;
};

struct JacobianTrace {
  std::vector<JacobianStep> steps;
  int refits_run = 0;
  int refits_skipped = 0;
  int reseeds = 0;
};

/// step * sign(grad_z p_c(z)) for the substitute's class-c probability.
inline Point jacobian_offset(const SoftmaxNetwork& substitute, const Point& z, int c, double step) {
  const Point g = substitute.probability_gradient(z, c);
  Point out(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) out[i] = g[i] > 0.0 ? step : (g[i] < 0.0 ? -step : 0.0);
  return out;
}

namespace jacobian_detail {

struct PointLess {
  bool operator()(const Point& a, const Point& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  }
};

/// Trains on at most `cap` samples (a fresh uniform subset when the set is
/// larger), warm-started from the previous substitute if there is one.
inline std::optional<SoftmaxNetwork> fit_substitute(const SyntheticDataset& ds, int k, std::size_t cap,
                                                    const std::optional<SoftmaxNetwork>& previous, RandomSource& rng) {
  SoftmaxNetwork net = previous ? *previous : SoftmaxNetwork(ds.dim, {}, k, rng);
  std::vector<std::size_t> rows(ds.size());
  if (ds.size() > cap) {
    rows = rng.subset(ds.size(), cap);
  } else {
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  }
  Eigen::MatrixXd inputs(ds.dim, static_cast<Eigen::Index>(rows.size()));
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    inputs.col(static_cast<Eigen::Index>(i)) = ds.samples[rows[i]].point;
    labels[i] = ds.samples[rows[i]].label.value;
  }
  AdamSettings s;
  s.epochs = 50;
  s.batch_size = 64;
  try {
    fit_adam(net, inputs, labels, s, rng);
  } catch (const TrainingError&) {
    return std::nullopt;
  }
  return net;
}

}  // namespace jacobian_detail

/// Substitute-driven augmentation with hard labels.
///
/// Each refit draws `seeds_per_refit` uniform seeds, trains a multinomial
/// logistic substitute on the collected set (capped at `fit_cap` samples),
/// then runs `rounds` rounds over the points not yet augmented: a point z with
/// oracle label c moves to clip(z + step * sign(grad p_c(z))), and the next
/// round augments the points the previous round added. Every point is a parent
/// at most once. Exact duplicates of collected points are dropped before
/// querying. Once the refit budget is spent, the rest of the budget is uniform.
inline SyntheticDataset jacobian_sampler(std::size_t n, Oracle& oracle, const JacobianParams& params, RandomSource& rng,
                                         ProgressFn progress = {}, JacobianTrace* trace = nullptr) {
  params.validate();
  require_budget(n, static_cast<std::size_t>(params.seeds_per_refit), "jacobian_sampler");
  DatasetBuilder out(oracle, "jacobian", rng.seed(), std::move(progress));
  const SampleSpace space(oracle.dim());
  const int k = std::max(oracle.num_classes(), 2);
  std::set<Point, jacobian_detail::PointLess> seen;
  JacobianTrace local;
  JacobianTrace& tr = trace ? *trace : local;
  std::vector<std::size_t> pending;

  auto add_seeds = [&] {
    for (int i = 0; i < params.seeds_per_refit && out.size() < n; ++i) {
      Point z = uniform_sample(space, rng);
      seen.insert(z);
      out.add_query(z);
      pending.push_back(out.size() - 1);
    }
  };
  add_seeds();

  std::optional<SoftmaxNetwork> substitute;
  int refit = 0;
  while (out.size() < n) {
    if (refit >= params.refits) {
      add_seeds();
      ++tr.reseeds;
      continue;
    }
    if (refit > 0) add_seeds();
    ++refit;
    if (out.size() >= n) break;
    if (auto fitted = jacobian_detail::fit_substitute(out.dataset(), k, params.fit_cap, substitute, rng)) {
      substitute = std::move(fitted);
    } else {
      ++tr.refits_skipped;
    }
    ++tr.refits_run;
    if (!substitute) continue;

    std::vector<std::size_t> frontier = std::move(pending);
    pending.clear();
    for (int round = 0; round < params.rounds && !frontier.empty(); ++round) {
      std::vector<std::size_t> next;
      std::size_t used = 0;
      for (; used < frontier.size() && out.size() < n; ++used) {
        const std::size_t idx = frontier[used];
        const LabeledSample parent = out.dataset().samples[idx];
        Point offset = jacobian_offset(*substitute, parent.point, parent.label.value, params.step);
        Point child = space.clip(parent.point + offset);
        if (!seen.insert(child).second) continue;
        out.add_query(child);
        next.push_back(out.size() - 1);
        tr.steps.push_back({idx, out.size() - 1, std::move(offset)});
      }
      frontier = std::move(next);
      if (out.size() >= n) break;
    }
    pending = std::move(frontier);
  }

  auto& meta = out.dataset().metadata;
  meta["refits"] = std::to_string(tr.refits_run);
  meta["refits_skipped"] = std::to_string(tr.refits_skipped);
  meta["reseeds"] = std::to_string(tr.reseeds);
  meta["step"] = csv_detail::format_double(params.step);
  meta["rounds"] = std::to_string(params.rounds);
  meta["seeds_per_refit"] = std::to_string(params.seeds_per_refit);
  meta["fit_cap"] = std::to_string(params.fit_cap);
  return out.finish();
}

inline SyntheticDataset jacobian_sampler(std::size_t n, Oracle& oracle, RandomSource& rng, ProgressFn progress = {}) {
  return jacobian_sampler(n, oracle, JacobianParams::for_budget(n), rng, std::move(progress));
}

}  // namespace copysample
