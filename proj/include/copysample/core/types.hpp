#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <ostream>
#include <string>

#include "copysample/core/error.hpp"

namespace copysample {

/// A location in the normalized input space. Coordinates are dimensionless.
using Point = Eigen::VectorXd;

/// Integer class index in [0, k).
struct ClassLabel {
  int value = 0;

  constexpr ClassLabel() = default;
  constexpr explicit ClassLabel(int v) : value(v) {}

  friend constexpr auto operator<=>(ClassLabel, ClassLabel) = default;
  friend std::ostream& operator<<(std::ostream& os, ClassLabel c) { return os << c.value; }
};

struct LabeledSample {
  Point point;
  ClassLabel label;
};

/// The restricted input space [0,1]^d.
class SampleSpace {
 public:
  explicit SampleSpace(int dim) : dim_(dim) {
    if (dim < 1) throw PreconditionError("sample space dimension must be >= 1, got " + std::to_string(dim));
  }

  int dim() const { return dim_; }

  bool contains(const Point& z) const {
    if (z.size() != dim_) return false;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (!(z[i] >= 0.0 && z[i] <= 1.0)) return false;
    }
    return true;
  }

  Point clip(const Point& z) const { return z.cwiseMax(0.0).cwiseMin(1.0); }

 private:
  int dim_;
};

inline void require_dim(const Point& z, int dim, const char* what) {
  if (z.size() != dim) {
    throw PreconditionError(std::string(what) + ": expected dimension " + std::to_string(dim) + ", got " +
                            std::to_string(z.size()));
  }
}

}  // namespace copysample
