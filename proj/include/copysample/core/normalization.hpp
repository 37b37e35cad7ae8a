#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "copysample/core/dataset.hpp"
#include "copysample/core/random.hpp"

namespace copysample {

/// Per-column affine map x -> x * scale + shift.
///
/// Fitted so that every column ends with mean 0.5 and population standard
/// deviation 1/5.152; for uncorrelated normal attributes about 0.99^d of the
/// mass then falls inside the unit hypercube.
struct NormalizationTransform {
  static constexpr double target_mean = 0.5;
  static constexpr double target_std = 1.0 / 5.152;

  Eigen::RowVectorXd shift;
  Eigen::RowVectorXd scale;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const {
    return (raw.array().rowwise() * scale.array()).rowwise() + shift.array();
  }

  Eigen::MatrixXd inverse(const Eigen::MatrixXd& normalized) const {
    return (normalized.array().rowwise() - shift.array()).rowwise() / scale.array();
  }
};

inline NormalizationTransform fit_normalization(const Eigen::MatrixXd& raw) {
  if (raw.rows() < 2) throw PreconditionError("fit_normalization: need at least 2 rows");
  NormalizationTransform t;
  t.shift.resize(raw.cols());
  t.scale.resize(raw.cols());
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double mean = raw.col(c).mean();
    const double var = (raw.col(c).array() - mean).square().mean();
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) throw DegenerateColumnError("fit_normalization: column " + std::to_string(c) + " is constant");
    t.scale[c] = NormalizationTransform::target_std / sd;
    t.shift[c] = NormalizationTransform::target_mean - mean * t.scale[c];
  }
  return t;
}

struct Split {
  LabelledMatrix train;
  LabelledMatrix test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

namespace split_detail {
inline LabelledMatrix gather(const LabelledMatrix& m, const std::vector<std::size_t>& rows) {
  LabelledMatrix out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), m.x.cols());
  out.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = m.x.row(static_cast<Eigen::Index>(rows[i]));
    out.y.push_back(m.y[rows[i]]);
  }
  return out;
}
}  // namespace split_detail

/// Stratified train/test split.
///
/// Each class contributes round_half_up(n_c * fraction) training rows,
/// clamped to [1, n_c - 1] so both sides see every class. Rows keep their
/// original relative order on each side.
inline Split stratified_split(const LabelledMatrix& data, double fraction, RandomSource& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw PreconditionError("stratified_split: fraction must be in (0,1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.rows(); ++i) by_class[data.y[i]].push_back(i);

  Split s;
  for (auto& [label, rows] : by_class) {
    if (rows.size() < 2) {
      throw StratificationError("stratified_split: class " + std::to_string(label) + " has fewer than 2 samples");
    }
    const auto n = static_cast<double>(rows.size());
    auto take = static_cast<std::size_t>(std::floor(n * fraction + 0.5));
    take = std::clamp<std::size_t>(take, 1, rows.size() - 1);
    rng.shuffle(rows);
    s.train_rows.insert(s.train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    s.test_rows.insert(s.test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
  }
  std::sort(s.train_rows.begin(), s.train_rows.end());
  std::sort(s.test_rows.begin(), s.test_rows.end());
  s.train = split_detail::gather(data, s.train_rows);
  s.test = split_detail::gather(data, s.test_rows);
  return s;
}

}  // namespace copysample
