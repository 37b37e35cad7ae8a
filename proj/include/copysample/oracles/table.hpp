#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>

#include "copysample/core/dataset.hpp"
#include "copysample/oracles/oracle.hpp"

namespace copysample {

/// 1-nearest-neighbour lookup over an exported labelled grid.
///
/// Lets any model be copied once its predictions on a set of points have been
/// dumped to CSV. Distance ties go to the lowest row index.
class TableOracle final : public Oracle {
 public:
  explicit TableOracle(LabelledMatrix reference, int num_classes = 0)
      : Oracle(reference.cols() > 0 ? reference.cols() : 1, resolve_classes(reference, num_classes)),
        ref_(std::move(reference)) {
    if (ref_.rows() == 0) throw PreconditionError("TableOracle: empty reference table");
  }

  static TableOracle from_csv(const std::filesystem::path& path, int num_classes = 0) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open table oracle " + path.string());
    return TableOracle(read_csv(is), num_classes);
  }

  const LabelledMatrix& reference() const { return ref_; }

  std::size_t nearest_row(const Point& z) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ref_.rows(); ++i) {
      const double d = (ref_.x.row(static_cast<Eigen::Index>(i)).transpose() - z).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  std::string describe() const override {
    return "table(d=" + std::to_string(dim()) + ", rows=" + std::to_string(ref_.rows()) + ")";
  }

 protected:
  ClassLabel classify(const Point& z) override { return ClassLabel(ref_.y[nearest_row(z)]); }

 private:
  static int resolve_classes(const LabelledMatrix& m, int requested) {
    int k = 0;
    for (int y : m.y) {
      if (y < 0) throw PreconditionError("TableOracle: negative label");
      k = std::max(k, y + 1);
    }
    if (requested > 0) {
      if (requested < k) throw PreconditionError("TableOracle: table has labels beyond the declared class count");
      return requested;
    }
    return std::max(k, 1);
  }

  LabelledMatrix ref_;
};

}  // namespace copysample
