#include "seacache/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <optional>
#include <random>

#include "fft.hpp"
#include "seacache/errors.hpp"
#include "seacache/seafilter.hpp"

namespace seacache {

namespace {

std::vector<double> white_noise(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = normal(rng);
  return out;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined state.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> field_spectrum(const RadialGrid& grid, const PowerLawPrior& prior) {
  auto spectrum = prior_spectrum(grid, prior);
  // Fields are zero-mean whether or not the prior has a pole there.
  spectrum[0] = 0.0;
  return spectrum;
}

FeatureTensor sample_field(const FieldSampler& sampler) {
  const RadialGrid grid(sampler.shape);
  const auto spectrum = field_spectrum(grid, sampler.prior);
  std::vector<double> amplitude(spectrum.size());
  std::transform(spectrum.begin(), spectrum.end(), amplitude.begin(),
                 [](double s) { return std::sqrt(s); });

  std::mt19937_64 rng(sampler.seed);
  const std::size_t n = sampler.shape.size();
  FeatureTensor field(sampler.channels, sampler.shape);
  std::vector<std::complex<double>> buffer(n);
  for (std::size_t c = 0; c < sampler.channels; ++c) {
    // The DFT of real white noise has unit-variance complex Gaussian
    // coefficients (per N) with conjugate symmetry already in place.
    const auto noise = white_noise(rng, n);
    for (std::size_t p = 0; p < n; ++p) buffer[p] = {noise[p], 0.0};
    detail::fft_inplace(buffer, sampler.shape, detail::FftDirection::Forward);
    for (std::size_t p = 0; p < n; ++p) buffer[p] *= amplitude[p];
    detail::fft_inplace(buffer, sampler.shape, detail::FftDirection::Inverse);
    auto dst = field.channel(c);
    for (std::size_t p = 0; p < n; ++p) dst[p] = buffer[p].real();
  }
  return field;
}

FeatureTensor sample_noise(std::size_t channels, const GridShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return FeatureTensor(channels, shape, white_noise(rng, channels * shape.size()));
}

std::vector<double> periodogram(std::span<const double> channel, const GridShape& shape) {
  if (channel.size() != shape.size()) throw InvalidArgument("periodogram: length mismatch");
  std::vector<std::complex<double>> buffer(channel.begin(), channel.end());
  detail::fft_inplace(buffer, shape, detail::FftDirection::Forward);
  std::vector<double> power(buffer.size());
  const double n = static_cast<double>(buffer.size());
  for (std::size_t p = 0; p < buffer.size(); ++p) power[p] = std::norm(buffer[p]) / n;
  return power;
}

FeatureTensor forward_noise(const FeatureTensor& x0, int t, const NoiseSchedule& schedule,
                            const FeatureTensor& noise) {
  require_same_layout(x0, noise, "forward_noise");
  const double a = schedule.a(t);
  const double b = schedule.b(t);
  FeatureTensor out(x0.channels(), x0.shape());
  auto dst = out.data();
  const auto src = x0.data();
  const auto eps = noise.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a * src[i] + b * eps[i];
  return out;
}

DenoiserBank::DenoiserBank(const NoiseSchedule& schedule, const RadialGrid& grid,
                           const PowerLawPrior& prior) {
  const auto spectrum = field_spectrum(grid, prior);
  gains_.reserve(schedule.steps() + 1);
  for (int t = 0; t <= schedule.steps(); ++t) {
    gains_.push_back(wiener_response(spectrum, effective_signal_coeff(schedule, t), schedule.b(t)));
  }
}

std::span<const double> DenoiserBank::gains(int t) const {
  if (t < 0 || t > steps()) throw IndexError("denoiser timestep " + std::to_string(t) + " out of range");
  return gains_[static_cast<std::size_t>(t)];
}

FeatureTensor denoise_mmse(const FeatureTensor& x_t, int t, const DenoiserBank& bank) {
  return apply_filter(bank.gains(t), x_t);
}

double analytic_mmse(std::span<const double> spectrum, double a, double b) {
  double total = 0.0;
  for (double s : spectrum) {
    if (std::isinf(s)) {
      total += a > 0.0 ? (b * b) / (a * a) : kInfinitePower;
    } else {
      const double denom = a * a * s + b * b;
      total += denom > 0.0 ? s * b * b / denom : 0.0;
    }
  }
  return total / static_cast<double>(spectrum.size());
}

FeatureTensor reverse_step(const FeatureTensor& x_t, const FeatureTensor& x0_hat, int t,
                           const NoiseSchedule& schedule) {
  require_same_layout(x_t, x0_hat, "reverse_step");
  if (t < 1) throw InvalidArgument("reverse_step needs t >= 1");
  const double a = schedule.a(t);
  const double b = schedule.b(t);
  if (b == 0.0) throw InvalidArgument("reverse_step needs b[t] > 0");
  const double a_prev = schedule.a(t - 1);
  const double b_prev = schedule.b(t - 1);

  FeatureTensor out(x_t.channels(), x_t.shape());
  auto dst = out.data();
  const auto xt = x_t.data();
  const auto x0 = x0_hat.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double eps_hat = (xt[i] - a * x0[i]) / b;
    dst[i] = a_prev * x0[i] + b_prev * eps_hat;
  }
  return out;
}

double psnr(const FeatureTensor& x, const FeatureTensor& ref) {
  require_same_layout(x, ref, "psnr");
  const auto r = ref.data();
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
  const double peak = *hi - *lo;
  if (!(peak > 0.0)) throw InvalidArgument("psnr reference is constant");
  const auto xd = x.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = xd[i] - r[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(r.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

Testbed Testbed::make(ScheduleKind kind, int steps, const GridShape& shape, std::size_t channels,
                      const PowerLawPrior& prior) {
  auto schedule = make_schedule(kind, steps);
  RadialGrid grid(shape);
  DenoiserBank denoiser(schedule, grid, prior);
  FilterBank bank(schedule, std::move(grid), prior);
  return Testbed{std::move(schedule), std::move(bank), std::move(denoiser), channels};
}

SeedDraw draw_seed(const Testbed& testbed, std::uint64_t seed) {
  const GridShape& shape = testbed.grid().shape();
  return {sample_field({shape, testbed.channels, testbed.prior(), stream_seed(seed, 0)}),
          sample_noise(testbed.channels, shape, stream_seed(seed, 1))};
}

void CachePolicy::validate() const {
  switch (kind) {
    case PolicyKind::FullCompute:
      return;
    case PolicyKind::Metric:
      metric.validate();
      if (!(delta > 0.0)) throw InvalidArgument("gated policy needs delta > 0");
      return;
    case PolicyKind::OracleRaw:
    case PolicyKind::OracleSea:
      if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
        throw InvalidArgument("oracle policy needs a target ratio in (0, 1]");
      }
      return;
  }
}

namespace {

using DecideFn = std::function<CacheDecision(int t, const FeatureTensor& x_t)>;

SamplerRun run_loop(const Testbed& testbed, const FeatureTensor& x0, const FeatureTensor& init_noise,
                    bool record, const DecideFn& decide) {
  require_same_layout(x0, init_noise, "run_sampler");
  if (x0.shape() != testbed.grid().shape()) {
    throw InvalidArgument("sample grid " + x0.shape().to_string() + " does not match testbed grid " +
                          testbed.grid().shape().to_string());
  }
  const auto& schedule = testbed.schedule;
  const int steps = schedule.steps();

  FeatureTensor x = forward_noise(x0, steps, schedule, init_noise);
  round_to_float32(x);
  FeatureTensor x0_hat(x0.channels(), x0.shape());
  SamplerRun run{FeatureTensor(x0.channels(), x0.shape()), {}, {}, 0.0, 0, {}, {}};
  for (int t = steps; t >= 1; --t) {
    const CacheDecision decision = decide(t, x);
    if (decision == CacheDecision::Refresh) {
      x0_hat = denoise_mmse(x, t, testbed.denoiser);
      round_to_float32(x0_hat);
      ++run.denoiser_calls;
    }
    if (record) {
      run.inputs.push_back(x);
      run.outputs.push_back(x0_hat);
    }
    x = reverse_step(x, x0_hat, t, schedule);
    round_to_float32(x);
  }
  run.final_sample = std::move(x);
  return run;
}

}  // namespace

SamplerRun run_fixed_schedule(const Testbed& testbed, std::span<const CacheDecision> decisions,
                              const FeatureTensor& x0, const FeatureTensor& init_noise, bool record) {
  const int steps = testbed.steps();
  if (decisions.size() != static_cast<std::size_t>(steps)) {
    throw InvalidArgument("fixed schedule needs one decision per sampling step");
  }
  if (decisions.front() != CacheDecision::Refresh) {
    throw InvalidArgument("fixed schedule must refresh at the first sampling step");
  }
  return run_loop(testbed, x0, init_noise, record, [&](int t, const FeatureTensor&) {
    return decisions[static_cast<std::size_t>(steps - t)];
  });
}

DistanceSeries output_distances(const SamplerRun& recorded, const Testbed& testbed,
                                const MetricKind& metric, double xi) {
  if (recorded.outputs.empty()) throw CapabilityError("run was not recorded");
  const MetricEvaluator evaluate(metric, testbed.bank, xi);
  const int steps = testbed.steps();
  DistanceSeries series{metric, {}, {}};
  FeatureTensor later = evaluate.project(recorded.outputs[0], steps);
  for (std::size_t i = 1; i < recorded.outputs.size(); ++i) {
    const int t = steps - static_cast<int>(i);
    FeatureTensor earlier = evaluate.project(recorded.outputs[i], t);
    series.push(t, evaluate.distance(earlier, later));
    later = std::move(earlier);
  }
  return series;
}

DistanceSeries input_distances(const SamplerRun& recorded, const Testbed& testbed,
                               const MetricKind& metric, double xi) {
  if (recorded.inputs.empty()) throw CapabilityError("run was not recorded");
  const MetricEvaluator evaluate(metric, testbed.bank, xi);
  const int steps = testbed.steps();
  DistanceSeries series{metric, {}, {}};
  FeatureTensor later = evaluate.project(recorded.inputs[0], steps);
  for (std::size_t i = 1; i < recorded.inputs.size(); ++i) {
    const int t = steps - static_cast<int>(i);
    FeatureTensor earlier = evaluate.project(recorded.inputs[i], t);
    series.push(t, evaluate.distance(earlier, later));
    later = std::move(earlier);
  }
  return series;
}

SamplerRun run_sampler(const SamplerConfig& config, const FeatureTensor& x0,
                       const FeatureTensor& init_noise) {
  if (config.testbed == nullptr) throw InvalidArgument("sampler config has no testbed");
  config.policy.validate();
  const Testbed& testbed = *config.testbed;
  const int steps = testbed.steps();

  switch (config.policy.kind) {
    case PolicyKind::FullCompute: {
      auto run = run_loop(testbed, x0, init_noise, config.record,
                          [](int, const FeatureTensor&) { return CacheDecision::Refresh; });
      for (int t = steps; t >= 1; --t) run.trace.push(t, CacheDecision::Refresh, 0.0);
      return run;
    }
    case PolicyKind::Metric: {
      const MetricEvaluator evaluate(config.policy.metric, testbed.bank, config.xi);
      CacheGate gate(config.policy.delta);
      GateTrace trace;
      DistanceSeries series{config.policy.metric, {}, {}};
      std::optional<FeatureTensor> later;
      auto run = run_loop(testbed, x0, init_noise, config.record,
                          [&](int t, const FeatureTensor& x_t) {
                            FeatureTensor projected = evaluate.project(x_t, t);
                            CacheDecision decision = CacheDecision::Refresh;
                            if (!later) {
                              gate.force_refresh();
                            } else {
                              const double d = evaluate.distance(projected, *later);
                              series.push(t, d);
                              decision = gate.step(d);
                            }
                            trace.push(t, decision, gate.accumulator());
                            later = std::move(projected);
                            return decision;
                          });
      run.trace = std::move(trace);
      run.distances = std::move(series);
      run.delta = config.policy.delta;
      return run;
    }
    case PolicyKind::OracleRaw:
    case PolicyKind::OracleSea: {
      const auto reference = run_loop(testbed, x0, init_noise, true,
                                      [](int, const FeatureTensor&) { return CacheDecision::Refresh; });
      const MetricKind metric =
          config.policy.kind == PolicyKind::OracleSea ? MetricKind::sea() : MetricKind::raw();
      auto series = output_distances(reference, testbed, metric, config.xi);
      const auto search = delta_for_target_ratio(series, config.policy.target_ratio);
      auto trace = simulate_gate(series, search.delta, true);
      auto run = run_fixed_schedule(testbed, trace.decisions, x0, init_noise, config.record);
      run.trace = std::move(trace);
      run.distances = std::move(series);
      run.delta = search.delta;
      return run;
    }
  }
  throw InvalidArgument("unknown cache policy");
}

MatchedRun run_at_target_ratio(const Testbed& testbed, const MetricKind& metric,
                               double target_ratio, const FeatureTensor& x0,
                               const FeatureTensor& init_noise, double xi) {
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
    throw InvalidArgument("target refresh ratio must lie in (0, 1]");
  }
  SamplerConfig config{&testbed, CachePolicy::gated(metric, 1.0), xi, 0, false};
  auto run_with = [&](double delta) {
    config.policy.delta = delta;
    return run_sampler(config, x0, init_noise);
  };

  std::optional<MatchedRun> best;
  auto consider = [&](double delta, SamplerRun run) {
    const double gap = std::abs(run.trace.refresh_ratio() - target_ratio);
    if (!best) {
      best = MatchedRun{std::move(run), delta};
      return;
    }
    const double best_gap = std::abs(best->run.trace.refresh_ratio() - target_ratio);
    if (gap < best_gap ||
        (gap == best_gap && run.trace.refresh_ratio() > best->run.trace.refresh_ratio())) {
      best = MatchedRun{std::move(run), delta};
    }
  };
  auto matched = [&] {
    return best && std::abs(best->run.trace.refresh_ratio() - target_ratio) <= 1e-12;
  };

  const double floor_ratio = 1.0 / static_cast<double>(testbed.steps());
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 64; ++i) {
    auto run = run_with(hi);
    const double ratio = run.trace.refresh_ratio();
    consider(hi, std::move(run));
    if (ratio <= target_ratio || ratio <= floor_ratio) break;
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 64 && !matched(); ++i) {
    const double mid = lo > 0.0 ? lo + (hi - lo) / 2.0 : hi / 2.0;
    if (!(mid > lo && mid < hi)) break;
    auto run = run_with(mid);
    const double ratio = run.trace.refresh_ratio();
    consider(mid, std::move(run));
    if (ratio > target_ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::move(*best);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("pearson: series lengths differ");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace seacache
