#pragma once

#include "copysample/samplers/common.hpp"

namespace copysample {

/// N i.i.d. uniform points, each labelled by one query. Accumulative: a
/// shorter run with the same seed is a prefix of a longer one.
inline SyntheticDataset random_sampler(std::size_t n, Oracle& oracle, RandomSource& rng, ProgressFn progress = {}) {
  require_budget(n, 1, "random_sampler");
  DatasetBuilder out(oracle, "random", rng.seed(), std::move(progress));
  const SampleSpace space(oracle.dim());
  for (std::size_t i = 0; i < n; ++i) out.add_query(uniform_sample(space, rng));
  return out.finish();
}

}  // namespace copysample
