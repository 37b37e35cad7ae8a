#pragma once

#include <chrono>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "copysample/harness/experiment.hpp"

namespace copysample {

struct TimingProfile {
  std::string method;
  std::vector<std::pair<std::size_t, double>> checkpoints;  // (sample_count, elapsed seconds)
};

/// Generates max(checkpoints) samples in one run and records the wall time
/// at which each checkpoint count is first reached.
inline TimingProfile timing_profile(Method method, const std::vector<std::size_t>& checkpoints, Oracle& oracle,
                                    const SamplerSettings& settings, RandomSource& rng) {
  if (checkpoints.empty()) throw PreconditionError("timing_profile: no checkpoints");
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (checkpoints[i] <= checkpoints[i - 1]) throw PreconditionError("timing_profile: checkpoints must be strictly ascending");
  }
  TimingProfile profile{std::string(to_string(method)), {}};
  using clock = std::chrono::steady_clock;
  std::size_t next = 0;
  const auto start = clock::now();
  auto record = [&](std::size_t count) {
    while (next < checkpoints.size() && count >= checkpoints[next]) {
      const double t = std::chrono::duration<double>(clock::now() - start).count();
      profile.checkpoints.emplace_back(checkpoints[next], t);
      ++next;
    }
  };
  const SyntheticDataset ds = generate(method, checkpoints.back(), oracle, settings, rng, record);
  record(ds.size());
  return profile;
}

inline void write_timing(std::ostream& os, const std::vector<TimingProfile>& profiles) {
  os << "method,sample_count,elapsed_s\n";
  for (const auto& p : profiles)
    for (const auto& [n, t] : p.checkpoints) os << p.method << ',' << n << ',' << csv_detail::format_double(t) << '\n';
}

}  // namespace copysample
