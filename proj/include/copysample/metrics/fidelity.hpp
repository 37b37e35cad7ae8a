#pragma once

#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "copysample/copies/copy_model.hpp"
#include "copysample/core/random.hpp"
#include "copysample/oracles/oracle.hpp"

namespace copysample {

template <class M>
concept Classifier = requires(const M& m, const Point& z) {
  { m.predict(z) } -> std::same_as<ClassLabel>;
};

/// Fraction of points where the copy disagrees with the oracle's label.
template <Classifier M>
double empirical_fidelity_error(const M& copy, std::span<const LabeledSample> oracle_labelled) {
  if (oracle_labelled.empty()) throw PreconditionError("empirical_fidelity_error: empty set");
  std::size_t wrong = 0;
  for (const auto& s : oracle_labelled) wrong += copy.predict(s.point) != s.label ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(oracle_labelled.size());
}

/// One minus the mean per-class agreement rate over classes 0..k-1.
///
/// Each class weighs 1/k whatever its count, so a copy that ignores a rare
/// class is penalised in proportion to the number of classes, not the class
/// frequency. Every class must be present.
template <Classifier M>
double balanced_empirical_fidelity_error(const M& copy, std::span<const LabeledSample> oracle_labelled, int k) {
  if (k < 1) throw PreconditionError("balanced_empirical_fidelity_error: k must be >= 1");
  std::vector<std::size_t> count(static_cast<std::size_t>(k)), agree(static_cast<std::size_t>(k));
  for (const auto& s : oracle_labelled) {
    if (s.label.value < 0 || s.label.value >= k) throw MetricError("label " + std::to_string(s.label.value) + " outside [0,k)");
    const auto c = static_cast<std::size_t>(s.label.value);
    ++count[c];
    agree[c] += copy.predict(s.point) == s.label ? 1 : 0;
  }
  double mean_agreement = 0.0;
  for (std::size_t c = 0; c < count.size(); ++c) {
    if (count[c] == 0) throw MetricError("balanced fidelity error: class " + std::to_string(c) + " has no samples");
    mean_agreement += static_cast<double>(agree[c]) / static_cast<double>(count[c]);
  }
  return 1.0 - mean_agreement / static_cast<double>(k);
}

/// Uniform, oracle-labelled evaluation set.
struct ReferenceSet {
  std::vector<LabeledSample> samples;
  int num_classes = 0;
  bool balanced = false;
  bool quota_warning = false;  // a class quota could not be filled within the attempt budget
  std::vector<std::size_t> per_class_counts;
  std::uint64_t attempts = 0;

  std::size_t size() const { return samples.size(); }
};

/// Draws uniform points and labels them with the oracle.
///
/// Balanced sets use per-class rejection: classes 0..(L mod k)-1 get
/// ceil(L/k) slots, the rest floor(L/k); draws landing in a full class are
/// discarded. Within a class the kept points stay uniform. If `max_attempts`
/// draws do not fill every quota, the partial set is returned with
/// quota_warning set.
inline ReferenceSet build_reference_set(Oracle& oracle, std::size_t size, bool balanced, RandomSource& rng,
                                        std::uint64_t max_attempts) {
  const int k = oracle.num_classes();
  if (balanced && size < static_cast<std::size_t>(k)) throw PreconditionError("build_reference_set: L < k");
  ReferenceSet ref;
  ref.num_classes = k;
  ref.balanced = balanced;
  ref.per_class_counts.assign(static_cast<std::size_t>(k), 0);
  const SampleSpace space(oracle.dim());

  std::vector<std::size_t> quota(static_cast<std::size_t>(k), size);
  if (balanced) {
    for (int c = 0; c < k; ++c) {
      quota[static_cast<std::size_t>(c)] = size / static_cast<std::size_t>(k) + (static_cast<std::size_t>(c) < size % static_cast<std::size_t>(k) ? 1 : 0);
    }
  }
  while (ref.samples.size() < size && ref.attempts < max_attempts) {
    ++ref.attempts;
    Point z = uniform_sample(space, rng);
    const ClassLabel y = oracle.query(z);
    auto& have = ref.per_class_counts[static_cast<std::size_t>(y.value)];
    if (have >= quota[static_cast<std::size_t>(y.value)]) continue;
    ++have;
    ref.samples.push_back({std::move(z), y});
  }
  ref.quota_warning = ref.samples.size() < size;
  return ref;
}

struct QualityResult {
  double reference_error = 0.0;  // balanced error on the reference set itself
  double original_error = 0.0;   // balanced error on the original training rows
};

/// Fits `arch` on the reference set and scores it there and on the original
/// training rows. `original_train` must carry the oracle's predictions as labels.
inline QualityResult quality_checks(const ReferenceSet& ref, const LabelledMatrix& original_train, Architecture arch,
                                    const TrainConfig& cfg) {
  if (ref.samples.empty()) throw PreconditionError("quality_checks: empty reference set");
  SyntheticDataset ds;
  ds.dim = static_cast<int>(ref.samples.front().point.size());
  ds.num_classes = ref.num_classes;
  ds.generator_id = "reference";
  ds.samples = ref.samples;
  const CopyModel model = train(arch, ds, cfg);

  std::vector<LabeledSample> original;
  original.reserve(original_train.rows());
  for (std::size_t i = 0; i < original_train.rows(); ++i) {
    original.push_back({original_train.x.row(static_cast<Eigen::Index>(i)).transpose(), ClassLabel(original_train.y[i])});
  }
  QualityResult q;
  q.reference_error = balanced_empirical_fidelity_error(model, ref.samples, ref.num_classes);
  q.original_error = balanced_empirical_fidelity_error(model, original, ref.num_classes);
  return q;
}

}  // namespace copysample
