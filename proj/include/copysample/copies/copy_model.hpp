#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "copysample/copies/network.hpp"
#include "copysample/copies/tree.hpp"
#include "copysample/core/dataset.hpp"

namespace copysample {

enum class Architecture { LR, DT, ANN, ANN2 };

inline std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::LR: return "LR";
    case Architecture::DT: return "DT";
    case Architecture::ANN: return "ANN";
    case Architecture::ANN2: return "ANN2";
  }
  return "?";
}

inline Architecture parse_architecture(std::string_view s) {
  if (s == "LR") return Architecture::LR;
  if (s == "DT") return Architecture::DT;
  if (s == "ANN") return Architecture::ANN;
  if (s == "ANN2") return Architecture::ANN2;
  throw ConfigError("unknown architecture '" + std::string(s) + "' (expected LR, DT, ANN or ANN2)");
}

/// Hidden layer widths; LR has none.
inline std::vector<int> hidden_layers(Architecture a) {
  switch (a) {
    case Architecture::ANN: return {5};
    case Architecture::ANN2: return {50, 50, 50};
    default: return {};
  }
}

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 200;
  int batch_size = 64;
  int max_depth = std::numeric_limits<int>::max();
  int min_leaf = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0) || epochs < 1 || batch_size < 1 || max_depth < 1 || min_leaf < 1) {
      throw PreconditionError("TrainConfig: all settings must be positive");
    }
  }
};

struct TrainMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  int depth = 0;
  double training_error = 0.0;
};

/// Always answers the same class; what training on a single-class set yields.
struct ConstantClassifier {
  int label = 0;
};

/// A fitted copy. Hard labels only; immutable once trained.
class CopyModel {
 public:
  using Impl = std::variant<ConstantClassifier, SoftmaxNetwork, DecisionTree>;

  CopyModel(Architecture arch, int dim, int num_classes, Impl impl, TrainMeta meta = {})
      : arch_(arch), dim_(dim), num_classes_(num_classes), impl_(std::move(impl)), meta_(meta) {}

  Architecture architecture() const { return arch_; }
  int dim() const { return dim_; }
  int num_classes() const { return num_classes_; }
  const Impl& impl() const { return impl_; }
  const TrainMeta& meta() const { return meta_; }
  bool is_constant() const { return std::holds_alternative<ConstantClassifier>(impl_); }

  ClassLabel predict(const Point& z) const {
    require_dim(z, dim_, "CopyModel::predict");
    return std::visit(
        [&](const auto& m) -> ClassLabel {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, ConstantClassifier>) return ClassLabel(m.label);
          else return m.predict(z);
        },
        impl_);
  }

 private:
  Architecture arch_;
  int dim_;
  int num_classes_;
  Impl impl_;
  TrainMeta meta_;
};

inline double training_error(const CopyModel& model, const SyntheticDataset& ds) {
  std::size_t wrong = 0;
  for (const auto& s : ds.samples) wrong += model.predict(s.point) != s.label ? 1 : 0;
  return ds.empty() ? 0.0 : static_cast<double>(wrong) / static_cast<double>(ds.size());
}

/// Fits a copy on hard-labelled synthetic samples.
inline CopyModel train(Architecture arch, const SyntheticDataset& ds, const TrainConfig& cfg) {
  if (ds.empty()) throw PreconditionError("train: empty dataset");
  cfg.validate();
  const int k = std::max(ds.num_classes, 1);
  const int dim = ds.dim;
  const int first_label = ds.samples.front().label.value;
  bool single = true;
  for (const auto& s : ds.samples) {
    if (s.label.value < 0 || s.label.value >= k) throw PreconditionError("train: label outside [0,k)");
    single = single && s.label.value == first_label;
  }
  TrainMeta meta;
  meta.seed = cfg.seed;
  if (single) {
    CopyModel m(arch, dim, k, ConstantClassifier{first_label}, meta);
    return m;
  }

  const LabelledMatrix data = to_matrix(ds);
  if (arch == Architecture::DT) {
    TreeSettings ts{cfg.max_depth, cfg.min_leaf};
    DecisionTree tree = DecisionTree::fit(data.x, data.y, k, ts);
    meta.depth = tree.depth();
    CopyModel m(arch, dim, k, std::move(tree), meta);
    meta.training_error = training_error(m, ds);
    return CopyModel(arch, dim, k, m.impl(), meta);
  }

  RandomSource rng(derive_seed(cfg.seed, to_string(arch)));
  SoftmaxNetwork net(dim, hidden_layers(arch), k, rng);
  AdamSettings adam;
  adam.learning_rate = cfg.learning_rate;
  adam.epochs = cfg.epochs;
  adam.batch_size = cfg.batch_size;
  // Train on inputs mapped to [-1,1], then fold the map into the first layer:
  // W(2z - 1) + b == (2W)z + (b - W1).
  const Eigen::MatrixXd inputs = (2.0 * data.x.transpose()).array() - 1.0;
  const FitStats stats = fit_adam(net, inputs, data.y, adam, rng);
  auto& first = net.layers().front();
  first.bias -= first.weight.rowwise().sum();
  first.weight *= 2.0;
  meta.epochs = stats.epochs_run;
  CopyModel m(arch, dim, k, std::move(net), meta);
  meta.training_error = training_error(m, ds);
  return CopyModel(arch, dim, k, m.impl(), meta);
}

// Text container, version 1. Doubles are hexfloats so a save/load round trip
// is bit-exact.
//
//   copysample-model 1
//   arch <LR|DT|ANN|ANN2>
//   dim <d>
//   classes <k>
//   meta <seed> <epochs> <depth> <training_error>
//   kind constant <label>
//   kind network <layers>        then per layer: "layer <rows> <cols>",
//                                one line of weights (row-major), one of biases
//   kind tree <nodes>            then per node: "<feature> <threshold> <left> <right> <label>"
//   end
namespace model_io {

inline std::string hex(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, ptr);
}

inline double unhex(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  bool negative = false;
  if (!s.empty() && s[0] == '-') {
    negative = true;
    ++begin;
  }
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("model file: bad number '" + s + "'");
  return negative ? -v : v;
}

inline void expect(std::istream& is, std::string_view word) {
  std::string got;
  if (!(is >> got) || got != word) throw FormatError("model file: expected '" + std::string(word) + "', got '" + got + "'");
}

template <class T>
T read(std::istream& is, const char* what) {
  T v{};
  if (!(is >> v)) throw FormatError(std::string("model file: cannot read ") + what);
  return v;
}

inline double read_double(std::istream& is) { return unhex(read<std::string>(is, "number")); }

}  // namespace model_io

inline void save_model(std::ostream& os, const CopyModel& m) {
  using model_io::hex;
  os << "copysample-model 1\n";
  os << "arch " << to_string(m.architecture()) << "\n";
  os << "dim " << m.dim() << "\n";
  os << "classes " << m.num_classes() << "\n";
  os << "meta " << m.meta().seed << ' ' << m.meta().epochs << ' ' << m.meta().depth << ' ' << hex(m.meta().training_error)
     << "\n";
  std::visit(
      [&](const auto& impl) {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, ConstantClassifier>) {
          os << "kind constant " << impl.label << "\n";
        } else if constexpr (std::is_same_v<T, SoftmaxNetwork>) {
          os << "kind network " << impl.layers().size() << "\n";
          for (const auto& l : impl.layers()) {
            os << "layer " << l.weight.rows() << ' ' << l.weight.cols() << "\n";
            for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
              for (Eigen::Index j = 0; j < l.weight.cols(); ++j) os << (i || j ? " " : "") << hex(l.weight(i, j));
            os << "\n";
            for (Eigen::Index i = 0; i < l.bias.size(); ++i) os << (i ? " " : "") << hex(l.bias[i]);
            os << "\n";
          }
        } else {
          os << "kind tree " << impl.nodes().size() << "\n";
          for (const auto& n : impl.nodes()) {
            os << n.feature << ' ' << hex(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << n.label << "\n";
          }
        }
      },
      m.impl());
  os << "end\n";
}

inline CopyModel load_model(std::istream& is) {
  using namespace model_io;
  expect(is, "copysample-model");
  if (read<int>(is, "version") != 1) throw FormatError("model file: unsupported version");
  expect(is, "arch");
  const Architecture arch = parse_architecture(read<std::string>(is, "arch"));
  expect(is, "dim");
  const int dim = read<int>(is, "dim");
  expect(is, "classes");
  const int k = read<int>(is, "classes");
  expect(is, "meta");
  TrainMeta meta;
  meta.seed = read<std::uint64_t>(is, "seed");
  meta.epochs = read<int>(is, "epochs");
  meta.depth = read<int>(is, "depth");
  meta.training_error = read_double(is);
  expect(is, "kind");
  const auto kind = read<std::string>(is, "kind");
  CopyModel::Impl impl;
  if (kind == "constant") {
    impl = ConstantClassifier{read<int>(is, "label")};
  } else if (kind == "network") {
    const auto count = read<std::size_t>(is, "layer count");
    std::vector<DenseLayer> layers(count);
    for (auto& l : layers) {
      expect(is, "layer");
      const auto rows = read<Eigen::Index>(is, "rows");
      const auto cols = read<Eigen::Index>(is, "cols");
      l.weight.resize(rows, cols);
      l.bias.resize(rows);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) l.weight(i, j) = read_double(is);
      for (Eigen::Index i = 0; i < rows; ++i) l.bias[i] = read_double(is);
    }
    impl = SoftmaxNetwork(dim, k, std::move(layers));
  } else if (kind == "tree") {
    const auto count = read<std::size_t>(is, "node count");
    std::vector<TreeNode> nodes(count);
    for (auto& n : nodes) {
      n.feature = read<int>(is, "feature");
      n.threshold = read_double(is);
      n.left = read<int>(is, "left");
      n.right = read<int>(is, "right");
      n.label = read<int>(is, "label");
    }
    impl = DecisionTree(dim, k, std::move(nodes));
  } else {
    throw FormatError("model file: unknown kind '" + kind + "'");
  }
  expect(is, "end");
  return CopyModel(arch, dim, k, std::move(impl), meta);
}

inline void save_model(const std::filesystem::path& path, const CopyModel& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  save_model(os, m);
}

inline CopyModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return load_model(is);
}

}  // namespace copysample
