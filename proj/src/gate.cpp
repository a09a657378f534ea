#include "seacache/gate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seacache/errors.hpp"

namespace seacache {

std::string_view to_string(CacheDecision decision) {
  return decision == CacheDecision::Refresh ? "REFRESH" : "REUSE";
}

CacheGate::CacheGate(double delta) : delta_(delta) {
  if (!(delta > 0.0)) throw InvalidArgument("cache threshold delta must be positive");
}

CacheDecision CacheGate::step(double distance) {
  if (!(distance >= 0.0) || !std::isfinite(distance)) {
    throw InvalidArgument("cache gate distance must be finite and nonnegative, got " +
                          std::to_string(distance));
  }
  accumulator_ += distance;
  if (accumulator_ > delta_) {
    accumulator_ = 0.0;
    return CacheDecision::Refresh;
  }
  return CacheDecision::Reuse;
}

std::size_t GateTrace::refresh_count() const noexcept {
  return static_cast<std::size_t>(
      std::count(decisions.begin(), decisions.end(), CacheDecision::Refresh));
}

double GateTrace::refresh_ratio() const noexcept {
  if (decisions.empty()) return 0.0;
  return static_cast<double>(refresh_count()) / static_cast<double>(decisions.size());
}

void GateTrace::push(int t, CacheDecision decision, double accumulator) {
  timesteps.push_back(t);
  decisions.push_back(decision);
  accumulator_after.push_back(accumulator);
}

GateTrace simulate_gate(const DistanceSeries& distances, double delta, bool force_first) {
  if (distances.timesteps.size() != distances.values.size()) {
    throw InvalidArgument("distance series has mismatched timestep and value arrays");
  }
  CacheGate gate(delta);
  GateTrace trace;
  trace.timesteps.reserve(distances.size() + 1);
  if (force_first) {
    const int first_t = distances.size() > 0 ? distances.timesteps.front() + 1 : 1;
    gate.force_refresh();
    trace.push(first_t, CacheDecision::Refresh, gate.accumulator());
  }
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const auto decision = gate.step(distances.values[i]);
    trace.push(distances.timesteps[i], decision, gate.accumulator());
  }
  return trace;
}

DeltaSearch delta_for_target_ratio(const DistanceSeries& distances, double target_ratio) {
  const std::size_t n = distances.size();
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
    throw InvalidArgument("target refresh ratio must lie in (0, 1]");
  }
  for (double d : distances.values) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("distances must be finite and >= 0");
  }

  // The trace only changes where delta crosses an accumulator value the gate
  // can actually reach: a running sum restarted at some index. Sums are
  // formed in the same order the gate forms them so comparisons are exact.
  std::vector<double> edges;
  edges.reserve(n * (n + 1) / 2);
  for (std::size_t start = 0; start < n; ++start) {
    double acc = 0.0;
    for (std::size_t i = start; i < n; ++i) {
      acc += distances.values[i];
      if (acc > 0.0) edges.push_back(acc);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  // Plateau k is [edges[k-1], edges[k]) with edges[-1] = 0; the last one
  // starts at the total and only the forced refresh fires there.
  const std::size_t plateaus = edges.size() + 1;
  auto representative = [&](std::size_t k) {
    if (edges.empty()) return 1.0;
    if (k == 0) return edges.front() / 2.0;
    if (k == plateaus - 1) return edges.back();
    const double mid = edges[k - 1] + (edges[k] - edges[k - 1]) / 2.0;
    return mid < edges[k] ? mid : edges[k - 1];
  };
  auto ratio_at = [&](std::size_t k) {
    return simulate_gate(distances, representative(k), true).refresh_ratio();
  };

  // Ratio is non-increasing in k: find the first plateau at or below target.
  std::size_t lo = 0;
  std::size_t hi = plateaus - 1;
  if (ratio_at(hi) > target_ratio) {
    lo = hi;
  } else {
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (ratio_at(mid) <= target_ratio) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
  }
  std::size_t best = lo;
  double best_ratio = ratio_at(lo);
  if (lo > 0) {
    const double above = ratio_at(lo - 1);
    if (std::abs(above - target_ratio) <= std::abs(best_ratio - target_ratio)) {
      best = lo - 1;
      best_ratio = above;
    }
  }
  return {representative(best), best_ratio, std::abs(best_ratio - target_ratio) <= 1e-12};
}

}  // namespace seacache
