#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seacache/metric.hpp"
#include "seacache/synthetic.hpp"

namespace seacache::cli {

// Seed used to fit the poly-fitted policy's coefficients; kept apart from
// the evaluation seeds 0..N-1.
inline constexpr std::uint64_t kPolyCalibrationSeed = 1'000'003;

struct Options {
  std::string subcommand;

  std::string schedule = "rf";
  int steps = 50;
  std::optional<double> beta;
  double amp = 1.0;
  std::uint32_t height = 64;
  std::uint32_t width = 64;
  std::optional<std::uint32_t> frames;
  std::uint32_t channels = 1;

  std::vector<double> delta;
  std::vector<double> target_ratio;
  double xi = kDefaultXi;
  std::optional<int> seeds;
  std::vector<std::uint64_t> seed_list;
  std::vector<std::string> policy;

  std::string traj;
  std::string out;
  std::string manifest;
  std::vector<int> t;
  double cutoff = kDefaultLpfCutoff;
  int poly_degree = kDefaultPolyDegree;
  std::vector<double> poly_coeffs;
  std::vector<std::string> kinds;
  std::string feature = "input";
  std::string series;
  std::string heatmap;
  std::string summary;
  std::string oracle_out;
  int threads = 0;
};

/// A sweep or simulate policy: display name plus sampler behaviour.
struct PolicySpec {
  std::string name;
  PolicyKind kind = PolicyKind::FullCompute;
  MetricKind metric;
};

PolicySpec parse_policy(const std::string& name, const Options& opts);
std::vector<std::uint64_t> resolve_seeds(const Options& opts, std::size_t fallback_count);
GridShape resolve_shape(const Options& opts);
PowerLawPrior resolve_prior(const Options& opts, int rank);

/// Each command writes its primary CSV to `out` and returns the resolved
/// configuration for the manifest.
nlohmann::json cmd_filterbank(const Options& opts, std::ostream& out);
nlohmann::json cmd_sweep(const Options& opts, std::ostream& out);
nlohmann::json cmd_replay(const Options& opts, std::ostream& out);
nlohmann::json cmd_gate_trace(const Options& opts, std::ostream& out);
nlohmann::json cmd_simulate(const Options& opts, std::ostream& out);

}  // namespace seacache::cli
