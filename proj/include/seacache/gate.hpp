#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "seacache/metric.hpp"

namespace seacache {

enum class CacheDecision { Refresh, Reuse };

std::string_view to_string(CacheDecision decision);

/// Accumulated-distance refresh rule. Distances are summed since the last
/// refresh; a refresh fires once the sum strictly exceeds delta, after which
/// the sum restarts from zero.
class CacheGate {
 public:
  explicit CacheGate(double delta);

  /// Throws InvalidArgument on a negative or non-finite distance.
  CacheDecision step(double distance);
  /// Unconditional refresh (first sampling step); resets the accumulator.
  void force_refresh() noexcept { accumulator_ = 0.0; }

  double delta() const noexcept { return delta_; }
  double accumulator() const noexcept { return accumulator_; }

 private:
  double delta_;
  double accumulator_ = 0.0;
};

/// Per-step decisions in sampling order (t = T down to 1).
struct GateTrace {
  std::vector<int> timesteps;
  std::vector<CacheDecision> decisions;
  std::vector<double> accumulator_after;

  std::size_t size() const noexcept { return decisions.size(); }
  std::size_t refresh_count() const noexcept;
  /// #REFRESH / #decisions.
  double refresh_ratio() const noexcept;
  void push(int t, CacheDecision decision, double accumulator);
};

/// Runs the gate over `distances` in order. With `force_first`, an extra
/// leading REFRESH is emitted for timestep distances.timesteps[0] + 1 (the
/// first sampling step, which has no preceding feature).
GateTrace simulate_gate(const DistanceSeries& distances, double delta, bool force_first = true);

struct DeltaSearch {
  double delta;
  double achieved_ratio;
  /// False when no threshold reaches the target exactly; achieved_ratio is
  /// then the nearest attainable ratio.
  bool exact;
};

/// Threshold whose forced-first trace attains the refresh ratio closest to
/// `target_ratio` (ties go to the higher ratio). Returns the midpoint of the
/// plateau of thresholds producing that ratio; for the plateau that only
/// fires the forced refresh, returns the total of all distances.
DeltaSearch delta_for_target_ratio(const DistanceSeries& distances, double target_ratio);

}  // namespace seacache
