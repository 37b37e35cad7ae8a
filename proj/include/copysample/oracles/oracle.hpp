#pragma once

#include <atomic>
#include <cstdint>
#include <string>

#include "copysample/core/types.hpp"

namespace copysample {

/// Hard-label membership-query interface to the model being copied.
///
/// Only class indices come back; there are no scores or gradients. Every
/// call to query() is metered, which is the cost model sample budgets refer to.
class Oracle {
 public:
  Oracle(int dim, int num_classes) : dim_(dim), num_classes_(num_classes) {
    if (dim < 1) throw PreconditionError("oracle dimension must be >= 1");
    if (num_classes < 1) throw PreconditionError("oracle class count must be >= 1");
  }
  virtual ~Oracle() = default;
  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  int dim() const { return dim_; }
  int num_classes() const { return num_classes_; }
  std::uint64_t query_count() const { return queries_.load(std::memory_order_relaxed); }

  ClassLabel query(const Point& z) {
    require_dim(z, dim_, "Oracle::query");
    const ClassLabel y = classify(z);
    if (y.value < 0 || y.value >= num_classes_) {
      throw ProtocolError("oracle returned label " + std::to_string(y.value) + " outside [0," +
                          std::to_string(num_classes_) + ")");
    }
    queries_.fetch_add(1, std::memory_order_relaxed);
    return y;
  }

  /// Whether concurrent query() calls are allowed on this handle.
  virtual bool thread_safe() const { return true; }

  virtual std::string describe() const = 0;

 protected:
  virtual ClassLabel classify(const Point& z) = 0;

 private:
  int dim_;
  int num_classes_;
  std::atomic<std::uint64_t> queries_{0};
};

}  // namespace copysample
