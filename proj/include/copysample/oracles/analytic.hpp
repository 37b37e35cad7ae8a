#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <variant>
#include <vector>

#include "copysample/oracles/oracle.hpp"

namespace copysample {

/// Label 1 where w.z >= offset, else 0.
struct Halfspace {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

/// Nested spheres around `center`; the label counts the radii the point lies outside of.
struct ConcentricCircles {
  Point center;
  std::vector<double> radii;  // ascending
};

/// Parity of the cell index sum on an m^d grid.
struct Checkerboard {
  int dim = 2;
  int cells_per_dim = 2;
};

/// Two interleaved spiral arms around (0.5, 0.5).
struct Spiral2d {
  double turns = 1.0;
};

/// Closed-form oracle whose decision boundary is known exactly.
///
/// These stand in for trained models in tests: the label is cheap and the
/// distance to the true boundary is available for measuring how close a
/// sampler stays to it.
class AnalyticOracle final : public Oracle {
 public:
  using Variant = std::variant<Halfspace, ConcentricCircles, Checkerboard, Spiral2d>;

  static constexpr double spiral_radius = 0.5;

  explicit AnalyticOracle(Variant v) : Oracle(dim_of(v), classes_of(v)), variant_(std::move(v)) { validate(); }

  const Variant& variant() const { return variant_; }

  /// Label without metering; for tests and plotting only.
  ClassLabel label_of(const Point& z) const {
    return std::visit([&](const auto& v) { return eval(v, z); }, variant_);
  }

  /// Euclidean distance from z to the decision boundary (+inf when there is none).
  double boundary_distance(const Point& z) const {
    require_dim(z, dim(), "boundary_distance");
    return std::visit([&](const auto& v) { return distance(v, z); }, variant_);
  }

  std::string describe() const override {
    std::ostringstream os;
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Halfspace>) {
            os << "halfspace(d=" << v.normal.size() << ")";
          } else if constexpr (std::is_same_v<T, ConcentricCircles>) {
            os << "circles(d=" << v.center.size() << ", rings=" << v.radii.size() << ")";
          } else if constexpr (std::is_same_v<T, Checkerboard>) {
            os << "checkerboard(d=" << v.dim << ", m=" << v.cells_per_dim << ")";
          } else {
            os << "spiral2d(turns=" << v.turns << ")";
          }
        },
        variant_);
    return os.str();
  }

 protected:
  ClassLabel classify(const Point& z) override { return label_of(z); }

 private:
  static int dim_of(const Variant& v) {
    return std::visit(
        [](const auto& x) -> int {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Halfspace>) return static_cast<int>(x.normal.size());
          else if constexpr (std::is_same_v<T, ConcentricCircles>) return static_cast<int>(x.center.size());
          else if constexpr (std::is_same_v<T, Checkerboard>) return x.dim;
          else return 2;
        },
        v);
  }

  static int classes_of(const Variant& v) {
    if (auto* c = std::get_if<ConcentricCircles>(&v)) return static_cast<int>(c->radii.size()) + 1;
    return 2;
  }

  void validate() const {
    if (auto* h = std::get_if<Halfspace>(&variant_)) {
      if (!(h->normal.norm() > 0.0)) throw PreconditionError("halfspace normal must be nonzero");
    } else if (auto* c = std::get_if<ConcentricCircles>(&variant_)) {
      for (std::size_t i = 0; i < c->radii.size(); ++i) {
        if (!(c->radii[i] > 0.0) || (i > 0 && !(c->radii[i] > c->radii[i - 1]))) {
          throw PreconditionError("circle radii must be positive and strictly ascending");
        }
      }
    } else if (auto* b = std::get_if<Checkerboard>(&variant_)) {
      if (b->cells_per_dim < 1) throw PreconditionError("checkerboard needs >= 1 cell per dimension");
    } else if (auto* s = std::get_if<Spiral2d>(&variant_)) {
      if (!(s->turns > 0.0)) throw PreconditionError("spiral turns must be positive");
    }
  }

  static ClassLabel eval(const Halfspace& h, const Point& z) { return ClassLabel(h.normal.dot(z) >= h.offset ? 1 : 0); }

  static ClassLabel eval(const ConcentricCircles& c, const Point& z) {
    const double r = (z - c.center).norm();
    int label = 0;
    for (double radius : c.radii) label += r >= radius ? 1 : 0;
    return ClassLabel(label);
  }

  static int cell(double x, int m) { return std::clamp(static_cast<int>(std::floor(x * m)), 0, m - 1); }

  static ClassLabel eval(const Checkerboard& b, const Point& z) {
    int sum = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) sum += cell(z[i], b.cells_per_dim);
    return ClassLabel(sum % 2);
  }

  static double spiral_phase(const Spiral2d& s, double dx, double dy) {
    const double theta = std::atan2(dy, dx);
    return theta / (2.0 * std::numbers::pi) + s.turns * std::hypot(dx, dy) / spiral_radius;
  }

  static ClassLabel eval(const Spiral2d& s, const Point& z) {
    const double twice = 2.0 * spiral_phase(s, z[0] - 0.5, z[1] - 0.5);
    const auto arm = static_cast<long long>(std::floor(twice));
    return ClassLabel(static_cast<int>(((arm % 2) + 2) % 2));
  }

  static double distance(const Halfspace& h, const Point& z) { return std::abs(h.normal.dot(z) - h.offset) / h.normal.norm(); }

  static double distance(const ConcentricCircles& c, const Point& z) {
    const double r = (z - c.center).norm();
    double best = std::numeric_limits<double>::infinity();
    for (double radius : c.radii) best = std::min(best, std::abs(r - radius));
    return best;
  }

  static double distance(const Checkerboard& b, const Point& z) {
    double best = std::numeric_limits<double>::infinity();
    const int m = b.cells_per_dim;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      for (int j = 1; j < m; ++j) best = std::min(best, std::abs(z[i] - static_cast<double>(j) / m));
    }
    return best;
  }

  // Boundary points at radius r sit at angles pi*m - 2*pi*turns*r/R, m in {0,1}.
  static double spiral_curve_distance(const Spiral2d& s, int arm, double r, double dx, double dy) {
    const double theta = std::numbers::pi * arm - 2.0 * std::numbers::pi * s.turns * r / spiral_radius;
    return std::hypot(dx - r * std::cos(theta), dy - r * std::sin(theta));
  }

  // Numerical: dense scan over the curve radius, then golden-section refinement.
  static double distance(const Spiral2d& s, const Point& z) {
    const double dx = z[0] - 0.5, dy = z[1] - 0.5;
    const double rz = std::hypot(dx, dy);
    double upper = std::min(spiral_curve_distance(s, 0, rz, dx, dy), spiral_curve_distance(s, 1, rz, dx, dy));
    const double lo = std::max(0.0, rz - upper), hi = rz + upper;
    constexpr int grid = 4000;
    const double h = (hi - lo) / grid;
    double best = upper;
    for (int arm = 0; arm < 2; ++arm) {
      auto f = [&](double r) { return spiral_curve_distance(s, arm, r, dx, dy); };
      for (int i = 0; i <= grid; ++i) {
        const double r = lo + h * i;
        const double fr = f(r);
        if (fr > best + 2.0 * h) continue;
        double a = std::max(lo, r - h), b = std::min(hi, r + h);
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - g * (b - a), d = a + g * (b - a);
        double fc = f(c), fd = f(d);
        for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
          if (fc < fd) {
            b = d; d = c; fd = fc; c = b - g * (b - a); fc = f(c);
          } else {
            a = c; c = d; fc = fd; d = a + g * (b - a); fd = f(d);
          }
        }
        best = std::min({best, fr, fc, fd});
      }
    }
    return best;
  }

  Variant variant_;
};

/// Distance to the true boundary; only analytic oracles know it.
inline double boundary_distance(const Oracle& oracle, const Point& z) {
  if (auto* a = dynamic_cast<const AnalyticOracle*>(&oracle)) return a->boundary_distance(z);
  throw UnsupportedError("boundary_distance: " + oracle.describe() + " has no closed-form boundary");
}

}  // namespace copysample
