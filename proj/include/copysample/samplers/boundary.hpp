#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <vector>

#include "copysample/samplers/common.hpp"

namespace copysample {

/// Boundary sampling parameters.
struct BoundaryParams {
  double epsilon = 0.01;   // bisection tolerance
  double step = 0.05;      // distance between consecutive thread samples
  double spawn_rate = 5.0; // Poisson mean of the gap between thread spawns
  int runs = 0;            // queue copies of each boundary hit
  int max_threads = 0;     // thread starts per boundary hit
  int max_steps = 0;       // samples per thread

  /// Defaults for a budget of n samples. Logs are natural; the step count is floored.
  static BoundaryParams for_budget(std::size_t n) {
    const double ln = std::log(static_cast<double>(std::max<std::size_t>(n, 1)));
    BoundaryParams p;
    p.runs = static_cast<int>(std::lround(2.0 + ln));
    p.max_threads = static_cast<int>(std::lround(8.0 + 4.0 * ln));
    p.max_steps = static_cast<int>(std::floor(5.0 + 2.6 * ln));
    return p;
  }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < step)) throw PreconditionError("BoundaryParams: need 0 < epsilon < step");
    if (!(spawn_rate >= 0.0)) throw PreconditionError("BoundaryParams: spawn_rate must be >= 0");
    if (runs < 1 || max_threads < 1 || max_steps < 1) {
      throw PreconditionError("BoundaryParams: runs, max_threads and max_steps must be >= 1");
    }
  }
};

struct BisectionResult {
  LabeledSample a;  // carries the label of the original `a`
  LabeledSample b;
  std::vector<LabeledSample> visited;  // every queried midpoint, in order
};

/// Bisects the segment between two differently labelled points until they are closer than eps.
inline BisectionResult binary_search_boundary(LabeledSample a, LabeledSample b, double eps, Oracle& oracle) {
  if (a.label == b.label) throw PreconditionError("binary_search_boundary: endpoints share a label");
  if (!(eps > 0.0)) throw PreconditionError("binary_search_boundary: eps must be positive");
  BisectionResult r;
  while ((b.point - a.point).norm() >= eps) {
    Point mid = 0.5 * (a.point + b.point);
    const ClassLabel y = oracle.query(mid);
    r.visited.push_back({mid, y});
    if (y != a.label) {
      b = {std::move(mid), y};
    } else {
      a = {std::move(mid), y};
    }
  }
  r.a = std::move(a);
  r.b = std::move(b);
  return r;
}

/// One exploration thread walking along the decision boundary.
struct Thread {
  LabeledSample current;
  Point direction;  // unit vector
  int steps_taken = 0;
  std::int64_t spawn_countdown = 1;
};

struct ThreadStep {
  Thread thread;        // thread.current is the newly accepted sample
  bool spawned = false; // the accepted sample should seed a new thread
};

inline std::int64_t draw_spawn_gap(double rate, RandomSource& rng) { return std::max<std::int64_t>(1, rng.poisson(rate)); }

/// Advances a thread by one step of length `step`.
///
/// Sweeps alpha from 1 down to -1 in steps of 0.1 over directions
/// v = alpha*u + w, w orthogonal to u with |v| = 1 (w's direction is drawn
/// once per step), and takes the first probe whose label differs from the
/// thread's. Probes outside the hypercube are skipped unqueried. Returns
/// nullopt when no alpha flips the label.
inline std::optional<ThreadStep> thread_step(const Thread& t, Oracle& oracle, double step, double spawn_rate,
                                             RandomSource& rng) {
  const int d = oracle.dim();
  const SampleSpace space(d);
  const Point& u = t.direction;

  Point w_dir = Point::Zero(d);
  if (d > 1) {
    double norm = 0.0;
    do {
      Point g = rng.normal_vector(d);
      w_dir = g - g.dot(u) * u;
      norm = w_dir.norm();
    } while (!(norm > 1e-12));
    w_dir /= norm;
  }

  for (int i = 0; i <= 20; ++i) {
    const double alpha = static_cast<double>(10 - i) / 10.0;
    const double w_len = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
    if (d == 1 && w_len > 0.0) continue;  // no orthogonal complement in 1-D
    const Point v = alpha * u + w_len * w_dir;
    Point probe = t.current.point + step * v;
    if (!space.contains(probe)) continue;
    const ClassLabel y = oracle.query(probe);
    if (y == t.current.label) continue;

    ThreadStep out;
    out.thread.current = {std::move(probe), y};
    out.thread.direction = v / v.norm();
    out.thread.steps_taken = t.steps_taken + 1;
    out.thread.spawn_countdown = t.spawn_countdown - 1;
    if (out.thread.spawn_countdown <= 0) {
      out.spawned = true;
      out.thread.spawn_countdown = draw_spawn_gap(spawn_rate, rng);
    }
    return out;
  }
  return std::nullopt;
}

/// Lazy generator for the exploration half of boundary sampling.
///
/// Alternates three phases: a uniform scan until two consecutive draws
/// disagree, a bisection down to epsilon, and a queue of threads seeded from
/// the bisection endpoint. Every sample the algorithm keeps (scan draws,
/// midpoints, accepted thread steps) is emitted in order by next().
class BoundaryExplorer {
 public:
  BoundaryExplorer(Oracle& oracle, BoundaryParams params, RandomSource& rng)
      : oracle_(oracle), space_(oracle.dim()), params_(params), rng_(rng) {
    params_.validate();
  }

  LabeledSample next() {
    while (buffer_.empty()) advance();
    LabeledSample s = std::move(buffer_.front());
    buffer_.pop_front();
    return s;
  }

  bool fell_back() const { return phase_ == Phase::Fallback; }
  std::size_t boundary_hits() const { return boundary_hits_; }
  std::size_t threads_started() const { return threads_total_; }

 private:
  enum class Phase { ScanStart, Scan, Threads, Fallback };

  void emit(Point z, ClassLabel y) { buffer_.push_back({std::move(z), y}); }

  void advance() {
    switch (phase_) {
      case Phase::ScanStart: {
        // The opening draw is queried but not kept.
        Point z = uniform_sample(space_, rng_);
        const ClassLabel y = oracle_.query(z);
        scan_last_ = {std::move(z), y};
        same_label_run_ = 0;
        phase_ = Phase::Scan;
        break;
      }
      case Phase::Scan: {
        LabeledSample prev = scan_last_;
        Point z = uniform_sample(space_, rng_);
        const ClassLabel y = oracle_.query(z);
        emit(z, y);
        scan_last_ = {z, y};
        if (y == prev.label) {
          if (++same_label_run_ >= 10 * static_cast<std::size_t>(params_.max_steps)) phase_ = Phase::Fallback;
          break;
        }
        auto bis = binary_search_boundary(scan_last_, prev, params_.epsilon, oracle_);
        for (auto& s : bis.visited) emit(s.point, s.label);
        const LabeledSample seed = bis.visited.empty() ? bis.a : bis.visited.back();
        queue_.clear();
        for (int i = 0; i < params_.runs; ++i) queue_.push_back(seed);
        threads_this_hit_ = 0;
        active_.reset();
        ++boundary_hits_;
        phase_ = Phase::Threads;
        break;
      }
      case Phase::Threads: {
        if (!active_) {
          if (queue_.empty() || threads_this_hit_ >= params_.max_threads) {
            phase_ = Phase::ScanStart;
            break;
          }
          Thread t;
          t.current = std::move(queue_.front());
          queue_.pop_front();
          Point u = rng_.normal_vector(space_.dim());
          t.direction = u / u.norm();
          t.spawn_countdown = draw_spawn_gap(params_.spawn_rate, rng_);
          active_ = std::move(t);
          ++threads_this_hit_;
          ++threads_total_;
        }
        auto step = thread_step(*active_, oracle_, params_.step, params_.spawn_rate, rng_);
        if (!step) {
          active_.reset();
          break;
        }
        emit(step->thread.current.point, step->thread.current.label);
        if (step->spawned) queue_.push_back(step->thread.current);
        if (step->thread.steps_taken >= params_.max_steps) {
          active_.reset();
        } else {
          active_ = std::move(step->thread);
        }
        break;
      }
      case Phase::Fallback: {
        Point z = uniform_sample(space_, rng_);
        const ClassLabel y = oracle_.query(z);
        emit(std::move(z), y);
        break;
      }
    }
  }

  Oracle& oracle_;
  SampleSpace space_;
  BoundaryParams params_;
  RandomSource& rng_;
  Phase phase_ = Phase::ScanStart;
  std::deque<LabeledSample> buffer_;
  LabeledSample scan_last_;
  std::size_t same_label_run_ = 0;
  std::deque<LabeledSample> queue_;
  std::optional<Thread> active_;
  int threads_this_hit_ = 0;
  std::size_t boundary_hits_ = 0;
  std::size_t threads_total_ = 0;
};

/// Index positions holding exploration samples in a boundary_sampler dataset.
constexpr bool is_exploration_index(std::size_t i) { return i % 2 == 0; }

/// Boundary sampling: half exploration, half uniform, interleaved.
///
/// Even positions come from BoundaryExplorer and odd positions are uniform
/// draws, so the dataset holds ceil(N/2) exploration samples and every
/// prefix keeps the same mix.
inline SyntheticDataset boundary_sampler(std::size_t n, Oracle& oracle, const BoundaryParams& params, RandomSource& rng,
                                         ProgressFn progress = {}) {
  require_budget(n, 2, "boundary_sampler");
  DatasetBuilder out(oracle, "boundary", rng.seed(), std::move(progress));
  RandomSource explore_rng(rng.next_u64());
  RandomSource uniform_rng(rng.next_u64());
  BoundaryExplorer explorer(oracle, params, explore_rng);
  const SampleSpace space(oracle.dim());

  for (std::size_t i = 0; i < n; ++i) {
    if (is_exploration_index(i)) {
      LabeledSample s = explorer.next();
      out.append(std::move(s.point), s.label);
    } else {
      out.add_query(uniform_sample(space, uniform_rng));
    }
  }
  auto& meta = out.dataset().metadata;
  meta["epsilon"] = csv_detail::format_double(params.epsilon);
  meta["step"] = csv_detail::format_double(params.step);
  meta["spawn_rate"] = csv_detail::format_double(params.spawn_rate);
  meta["runs"] = std::to_string(params.runs);
  meta["max_threads"] = std::to_string(params.max_threads);
  meta["max_steps"] = std::to_string(params.max_steps);
  meta["fallback"] = explorer.fell_back() ? "true" : "false";
  return out.finish();
}

inline SyntheticDataset boundary_sampler(std::size_t n, Oracle& oracle, RandomSource& rng, ProgressFn progress = {}) {
  return boundary_sampler(n, oracle, BoundaryParams::for_budget(n), rng, std::move(progress));
}

}  // namespace copysample
