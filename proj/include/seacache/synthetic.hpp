#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seacache/gate.hpp"
#include "seacache/metric.hpp"
#include "seacache/schedule.hpp"
#include "seacache/spectrum.hpp"
#include "seacache/tensor.hpp"

namespace seacache {

/// Independent 64-bit seed for substream `stream` of a run seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// Gaussian random fields with an exact power-law spectrum.
struct FieldSampler {
  GridShape shape;
  std::size_t channels = 1;
  PowerLawPrior prior;
  std::uint64_t seed = 0;
};

/// Zero-mean real field whose DFT coefficients satisfy
/// E|X(k)|^2 = N * A * |k|^-beta (N grid points), drawn by coloring white
/// Gaussian noise in the frequency domain. Deterministic in the seed.
FeatureTensor sample_field(const FieldSampler& sampler);

/// i.i.d. standard normal entries.
FeatureTensor sample_noise(std::size_t channels, const GridShape& shape, std::uint64_t seed);

/// Power spectrum of sample_field's law: the prior off the origin, 0 at DC.
std::vector<double> field_spectrum(const RadialGrid& grid, const PowerLawPrior& prior);

/// Per-point power |X(k)|^2 / N of one channel, the estimator whose mean is
/// the spectrum used by sample_field.
std::vector<double> periodogram(std::span<const double> channel, const GridShape& shape);

/// x_t = a[t] x0 + b[t] noise.
FeatureTensor forward_noise(const FeatureTensor& x0, int t, const NoiseSchedule& schedule,
                            const FeatureTensor& noise);

/// Unnormalized Wiener responses of the testbed's x0 law, one per timestep.
/// Uses field_spectrum, so DC gain is 0 except where b[t] = 0.
class DenoiserBank {
 public:
  DenoiserBank(const NoiseSchedule& schedule, const RadialGrid& grid, const PowerLawPrior& prior);
  std::span<const double> gains(int t) const;
  int steps() const noexcept { return static_cast<int>(gains_.size()) - 1; }

 private:
  std::vector<std::vector<double>> gains_;
};

/// Linear MMSE estimate of x0 from x_t: apply_filter(G_t, x_t).
FeatureTensor denoise_mmse(const FeatureTensor& x_t, int t, const DenoiserBank& bank);

/// Per-point analytic MMSE, (1/N) * sum S*b^2 / (a^2*S + b^2).
double analytic_mmse(std::span<const double> spectrum, double a, double b);

/// Deterministic x0-parameterized update from t to t-1.
FeatureTensor reverse_step(const FeatureTensor& x_t, const FeatureTensor& x0_hat, int t,
                           const NoiseSchedule& schedule);

inline constexpr double kPsnrCap = 99.0;

/// 10*log10(peak^2 / MSE), peak = max(ref) - min(ref), capped at 99 dB.
double psnr(const FeatureTensor& x, const FeatureTensor& ref);

/// Everything a synthetic run needs, built once and shared read-only.
struct Testbed {
  NoiseSchedule schedule;
  FilterBank bank;
  DenoiserBank denoiser;
  std::size_t channels;

  static Testbed make(ScheduleKind kind, int steps, const GridShape& shape, std::size_t channels,
                      const PowerLawPrior& prior);
  const RadialGrid& grid() const noexcept { return bank.grid(); }
  const PowerLawPrior& prior() const noexcept { return bank.prior(); }
  int steps() const noexcept { return schedule.steps(); }
};

/// Clean sample and forward-process noise for one run seed (independent
/// substreams 0 and 1 of the seed).
struct SeedDraw {
  FeatureTensor x0;
  FeatureTensor noise;
};
SeedDraw draw_seed(const Testbed& testbed, std::uint64_t seed);

enum class PolicyKind { FullCompute, Metric, OracleRaw, OracleSea };

struct CachePolicy {
  PolicyKind kind = PolicyKind::FullCompute;
  MetricKind metric;         // Metric only
  double delta = 0.0;        // Metric only
  double target_ratio = 1.0; // Oracle variants only

  static CachePolicy full_compute() { return {}; }
  static CachePolicy gated(MetricKind metric, double delta) {
    return {PolicyKind::Metric, std::move(metric), delta, 1.0};
  }
  static CachePolicy oracle_raw(double target) { return {PolicyKind::OracleRaw, {}, 0.0, target}; }
  static CachePolicy oracle_sea(double target) { return {PolicyKind::OracleSea, {}, 0.0, target}; }

  void validate() const;
};

struct SamplerConfig {
  const Testbed* testbed = nullptr;
  CachePolicy policy;
  double xi = kDefaultXi;
  std::uint64_t seed = 0;
  /// Keep every step's input x_t and output x0_hat in the result.
  bool record = false;
};

struct SamplerRun {
  FeatureTensor final_sample;
  GateTrace trace;
  /// Input-side distances for metric policies, output-side for oracles,
  /// empty for full compute.
  DistanceSeries distances;
  double delta = 0.0;  // threshold in effect (derived for oracles)
  int denoiser_calls = 0;
  /// When recorded: inputs[i] and outputs[i] belong to timestep T - i.
  std::vector<FeatureTensor> inputs;
  std::vector<FeatureTensor> outputs;
};

/// Runs the reverse process from x_T = forward_noise(x0, T, init_noise) down
/// to t = 0. The sampler state (x_t and every x0_hat) is kept at binary32
/// precision, the precision features are stored at on disk.
SamplerRun run_sampler(const SamplerConfig& config, const FeatureTensor& x0,
                       const FeatureTensor& init_noise);

/// Replays a given refresh pattern (decisions in sampling order, first must
/// be REFRESH) without consulting any metric.
SamplerRun run_fixed_schedule(const Testbed& testbed, std::span<const CacheDecision> decisions,
                              const FeatureTensor& x0, const FeatureTensor& init_noise,
                              bool record = false);

/// Output-side distance series of a recorded run, using `metric` on
/// consecutive outputs.
DistanceSeries output_distances(const SamplerRun& recorded, const Testbed& testbed,
                                const MetricKind& metric, double xi = kDefaultXi);
/// Input-side counterpart.
DistanceSeries input_distances(const SamplerRun& recorded, const Testbed& testbed,
                               const MetricKind& metric, double xi = kDefaultXi);

struct MatchedRun {
  SamplerRun run;
  double delta;
};

/// Searches the threshold of a gated policy so the live run's refresh ratio
/// is as close as possible to `target_ratio` (ties go to the higher ratio).
MatchedRun run_at_target_ratio(const Testbed& testbed, const MetricKind& metric,
                               double target_ratio, const FeatureTensor& x0,
                               const FeatureTensor& init_noise, double xi = kDefaultXi);

/// Pearson correlation coefficient; 0 when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace seacache
