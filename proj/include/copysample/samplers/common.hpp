#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "copysample/core/dataset.hpp"
#include "copysample/core/random.hpp"
#include "copysample/oracles/oracle.hpp"

namespace copysample {

/// Called with the dataset size after every append.
using ProgressFn = std::function<void(std::size_t)>;

/// Shared bookkeeping for a sampler run: dataset header, query metering, progress.
class DatasetBuilder {
 public:
  DatasetBuilder(Oracle& oracle, std::string generator_id, std::uint64_t seed, ProgressFn progress = {})
      : oracle_(oracle), start_queries_(oracle.query_count()), progress_(std::move(progress)) {
    ds_.dim = oracle.dim();
    ds_.num_classes = oracle.num_classes();
    ds_.generator_id = std::move(generator_id);
    ds_.seed = seed;
  }

  Oracle& oracle() { return oracle_; }
  std::size_t size() const { return ds_.size(); }
  SyntheticDataset& dataset() { return ds_; }

  void append(Point z, ClassLabel y) {
    ds_.append(std::move(z), y);
    if (progress_) progress_(ds_.size());
  }

  /// Queries z and appends the labelled sample.
  ClassLabel add_query(const Point& z) {
    const ClassLabel y = oracle_.query(z);
    append(z, y);
    return y;
  }

  SyntheticDataset finish() {
    ds_.query_count = oracle_.query_count() - start_queries_;
    return std::move(ds_);
  }

 private:
  Oracle& oracle_;
  std::uint64_t start_queries_;
  ProgressFn progress_;
  SyntheticDataset ds_;
};

inline void require_budget(std::size_t n, std::size_t minimum, const char* who) {
  if (n < minimum) {
    throw PreconditionError(std::string(who) + ": N must be >= " + std::to_string(minimum) + ", got " + std::to_string(n));
  }
}

}  // namespace copysample
