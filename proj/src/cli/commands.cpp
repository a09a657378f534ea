#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "seacache/errors.hpp"
#include "seacache/gate.hpp"
#include "seacache/report.hpp"
#include "seacache/schedule.hpp"
#include "seacache/spectrum.hpp"
#include "seacache/trajectory.hpp"

namespace seacache::cli {

using nlohmann::json;

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  return file;
}

json shape_json(const GridShape& shape) {
  json j = {{"rank", shape.rank()}, {"height", shape.height()}, {"width", shape.width()}};
  if (shape.rank() == 3) j["frames"] = shape.frames();
  return j;
}

json common_json(const Options& opts, const GridShape& shape, const PowerLawPrior& prior) {
  return {{"schedule", opts.schedule},
          {"steps", opts.steps},
          {"beta", prior.beta},
          {"amp", prior.amplitude},
          {"shape", shape_json(shape)},
          {"channels", opts.channels},
          {"xi", opts.xi}};
}

Testbed make_testbed(const Options& opts) {
  const GridShape shape = resolve_shape(opts);
  return Testbed::make(parse_schedule_kind(opts.schedule), opts.steps, shape, opts.channels,
                       resolve_prior(opts, static_cast<int>(shape.rank())));
}

std::string metric_cli_name(const MetricKind& kind) {
  switch (kind.tag) {
    case MetricTag::Raw: return "raw";
    case MetricTag::Sea: return "sea";
    case MetricTag::OneMinusSea: return "one-minus-sea";
    case MetricTag::SeaUnnormalized: return "sea-unnorm";
    case MetricTag::LpfCutoff:
      return "lpf" + std::to_string(static_cast<int>(std::lround(kind.cutoff_fraction * 100.0)));
    case MetricTag::PolyFitted: return "poly";
  }
  return "unknown";
}

std::vector<double> calibrate_poly(const Testbed& testbed, const Options& opts) {
  const auto draw = draw_seed(testbed, kPolyCalibrationSeed);
  SamplerConfig config{&testbed, CachePolicy::full_compute(), opts.xi, kPolyCalibrationSeed, true};
  const auto run = run_sampler(config, draw.x0, draw.noise);
  const auto inputs = input_distances(run, testbed, MetricKind::raw(), opts.xi);
  const auto outputs = output_distances(run, testbed, MetricKind::raw(), opts.xi);
  return fit_poly(inputs, outputs, opts.poly_degree).coeffs;
}

/// Output-side oracle at a fixed threshold (no ratio matching).
SamplerRun oracle_at_delta(const Testbed& testbed, const MetricKind& metric, double delta,
                           const SeedDraw& draw, double xi) {
  SamplerConfig config{&testbed, CachePolicy::full_compute(), xi, 0, true};
  const auto reference = run_sampler(config, draw.x0, draw.noise);
  auto series = output_distances(reference, testbed, metric, xi);
  auto trace = simulate_gate(series, delta, true);
  auto run = run_fixed_schedule(testbed, trace.decisions, draw.x0, draw.noise);
  run.trace = std::move(trace);
  run.distances = std::move(series);
  run.delta = delta;
  return run;
}

/// Quality reference: the uncached sample from the same draw.
FeatureTensor full_compute_sample(const Testbed& testbed, const SeedDraw& draw, double xi) {
  SamplerConfig config{&testbed, CachePolicy::full_compute(), xi, 0, false};
  return run_sampler(config, draw.x0, draw.noise).final_sample;
}

struct ParamPoint {
  bool is_ratio;
  double value;
};

std::vector<ParamPoint> param_grid(const Options& opts, bool required) {
  std::vector<ParamPoint> grid;
  for (double d : opts.delta) grid.push_back({false, d});
  for (double r : opts.target_ratio) grid.push_back({true, r});
  if (grid.empty() && required) throw InvalidArgument("one of --delta or --target-ratio is required");
  for (const auto& p : grid) {
    if (p.is_ratio && !(p.value > 0.0 && p.value <= 1.0)) {
      throw InvalidArgument("--target-ratio values must lie in (0, 1]");
    }
    if (!p.is_ratio && !(p.value > 0.0)) throw InvalidArgument("--delta values must be positive");
  }
  return grid;
}

/// One synthetic run under a policy at a threshold or a target ratio.
SamplerRun run_policy(const Testbed& testbed, const PolicySpec& policy, const ParamPoint& param,
                      const SeedDraw& draw, double xi, bool record) {
  switch (policy.kind) {
    case PolicyKind::FullCompute: {
      SamplerConfig config{&testbed, CachePolicy::full_compute(), xi, 0, record};
      return run_sampler(config, draw.x0, draw.noise);
    }
    case PolicyKind::Metric: {
      if (param.is_ratio) {
        auto matched = run_at_target_ratio(testbed, policy.metric, param.value, draw.x0, draw.noise, xi);
        if (!record) return std::move(matched.run);
        SamplerConfig config{&testbed, CachePolicy::gated(policy.metric, matched.delta), xi, 0, true};
        return run_sampler(config, draw.x0, draw.noise);
      }
      SamplerConfig config{&testbed, CachePolicy::gated(policy.metric, param.value), xi, 0, record};
      return run_sampler(config, draw.x0, draw.noise);
    }
    case PolicyKind::OracleRaw:
    case PolicyKind::OracleSea: {
      const MetricKind metric =
          policy.kind == PolicyKind::OracleSea ? MetricKind::sea() : MetricKind::raw();
      if (!param.is_ratio) return oracle_at_delta(testbed, metric, param.value, draw, xi);
      CachePolicy cp = policy.kind == PolicyKind::OracleSea ? CachePolicy::oracle_sea(param.value)
                                                             : CachePolicy::oracle_raw(param.value);
      SamplerConfig config{&testbed, cp, xi, 0, record};
      return run_sampler(config, draw.x0, draw.noise);
    }
  }
  throw InvalidArgument("unknown policy");
}

std::vector<MetricKind> resolve_kinds(const Options& opts) {
  std::vector<std::string> names = opts.kinds;
  if (names.empty() || (names.size() == 1 && names[0] == "all")) {
    names = {"raw", "sea", "one-minus-sea", "sea-unnorm", "lpf"};
    if (!opts.poly_coeffs.empty()) names.emplace_back("poly");
  }
  std::vector<MetricKind> kinds;
  for (const auto& name : names) {
    const MetricTag tag = parse_metric_tag(name);
    switch (tag) {
      case MetricTag::Raw: kinds.push_back(MetricKind::raw()); break;
      case MetricTag::Sea: kinds.push_back(MetricKind::sea()); break;
      case MetricTag::OneMinusSea: kinds.push_back(MetricKind::one_minus_sea()); break;
      case MetricTag::SeaUnnormalized: kinds.push_back(MetricKind::sea_unnormalized()); break;
      case MetricTag::LpfCutoff: kinds.push_back(parse_policy(name, opts).metric); break;
      case MetricTag::PolyFitted:
        if (opts.poly_coeffs.empty()) throw InvalidArgument("kind 'poly' needs --poly-coeffs");
        kinds.push_back(MetricKind::poly(opts.poly_coeffs));
        break;
    }
  }
  return kinds;
}

json kinds_json(const std::vector<MetricKind>& kinds) {
  json j = json::array();
  for (const auto& k : kinds) j.push_back(tag_name(k.tag));
  return j;
}

FeatureSide parse_side(const std::string& name) {
  if (name == "input") return FeatureSide::Input;
  if (name == "output") return FeatureSide::Output;
  throw InvalidArgument("--feature must be 'input' or 'output'");
}

/// Filter bank for a trajectory; prior flags apply, schedule comes from the file.
FilterBank trajectory_bank(const Trajectory& traj, const Options& opts) {
  return FilterBank(trajectory_schedule(traj), RadialGrid(traj.shape()),
                    resolve_prior(opts, traj.rank));
}

std::vector<LabelledTrace> gate_series(const std::vector<DistanceSeries>& all,
                                       const std::vector<ParamPoint>& grid) {
  std::vector<LabelledTrace> traces;
  for (const auto& series : all) {
    for (const auto& p : grid) {
      const double delta = p.is_ratio ? delta_for_target_ratio(series, p.value).delta : p.value;
      traces.push_back({std::string(tag_name(series.kind.tag)), delta, simulate_gate(series, delta)});
    }
  }
  return traces;
}

void write_summary_csv(std::ostream& out, const std::vector<LabelledTrace>& traces) {
  CsvWriter csv(out, {"run", "delta", "refresh_ratio", "first_half_fraction"});
  for (const auto& lt : traces) {
    csv.row(lt.run, lt.delta, lt.trace.refresh_ratio(), early_refresh_share(lt.trace));
  }
}

}  // namespace

PolicySpec parse_policy(const std::string& name, const Options& opts) {
  if (name == "full" || name == "full-compute") return {"full", PolicyKind::FullCompute, {}};
  if (name == "oracle-sea") return {name, PolicyKind::OracleSea, {}};
  if (name == "oracle-raw") return {name, PolicyKind::OracleRaw, {}};
  const MetricTag tag = parse_metric_tag(name);
  PolicySpec spec{name, PolicyKind::Metric, {}};
  switch (tag) {
    case MetricTag::Raw: spec.metric = MetricKind::raw(); break;
    case MetricTag::Sea: spec.metric = MetricKind::sea(); break;
    case MetricTag::OneMinusSea: spec.metric = MetricKind::one_minus_sea(); break;
    case MetricTag::SeaUnnormalized: spec.metric = MetricKind::sea_unnormalized(); break;
    case MetricTag::LpfCutoff: {
      double cutoff = opts.cutoff;
      const std::string digits = name.starts_with("lpf") ? name.substr(3) : "";
      if (!digits.empty()) {
        if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
          throw InvalidArgument("bad LPF policy '" + name + "', expected lpf<percent>");
        }
        cutoff = std::stod(digits) / 100.0;
      }
      spec.metric = MetricKind::lpf(cutoff);
      break;
    }
    case MetricTag::PolyFitted:
      spec.metric = MetricKind::poly(opts.poly_coeffs);
      break;
  }
  if (spec.metric.tag != MetricTag::PolyFitted || !spec.metric.poly_coeffs.empty()) {
    spec.metric.validate();
  }
  spec.name = metric_cli_name(spec.metric);
  return spec;
}

std::vector<std::uint64_t> resolve_seeds(const Options& opts, std::size_t fallback_count) {
  if (!opts.seed_list.empty()) return opts.seed_list;
  const int count = opts.seeds.value_or(static_cast<int>(fallback_count));
  if (count <= 0) throw InvalidArgument("--seeds must be positive");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
  return seeds;
}

GridShape resolve_shape(const Options& opts) {
  if (opts.frames) return GridShape::volumetric(*opts.frames, opts.height, opts.width);
  return GridShape::planar(opts.height, opts.width);
}

PowerLawPrior resolve_prior(const Options& opts, int rank) {
  PowerLawPrior prior = PowerLawPrior::default_for_rank(rank);
  if (opts.beta) prior.beta = *opts.beta;
  prior.amplitude = opts.amp;
  prior.validate();
  return prior;
}

json cmd_filterbank(const Options& opts, std::ostream& out) {
  const GridShape shape = resolve_shape(opts);
  const PowerLawPrior prior = resolve_prior(opts, static_cast<int>(shape.rank()));
  const FilterBank bank = build_filter_bank(make_schedule(parse_schedule_kind(opts.schedule), opts.steps),
                                            RadialGrid(shape), prior);
  std::vector<int> timesteps = opts.t;
  if (timesteps.empty()) {
    for (int t = 0; t <= bank.steps(); ++t) timesteps.push_back(t);
  }
  for (int t : timesteps) {
    if (t < 0 || t > bank.steps()) {
      throw IndexError("--t value " + std::to_string(t) + " outside [0, " +
                       std::to_string(bank.steps()) + "]");
    }
  }
  write_filterbank_csv(out, bank, timesteps);
  json j = common_json(opts, shape, prior);
  j["t"] = timesteps;
  j["bins"] = bank.grid().bins();
  return j;
}

json cmd_sweep(const Options& opts, std::ostream& out) {
  const Testbed testbed = make_testbed(opts);
  const auto seeds = resolve_seeds(opts, 1);
  const auto grid = param_grid(opts, true);
  const std::vector<std::string> names = opts.policy.empty() ? std::vector<std::string>{"sea"} : opts.policy;

  std::vector<PolicySpec> policies;
  std::vector<double> fitted;
  for (const auto& name : names) {
    auto spec = parse_policy(name, opts);
    if (spec.kind == PolicyKind::Metric && spec.metric.tag == MetricTag::PolyFitted &&
        spec.metric.poly_coeffs.empty()) {
      if (fitted.empty()) fitted = calibrate_poly(testbed, opts);
      spec.metric.poly_coeffs = fitted;
    }
    policies.push_back(std::move(spec));
  }

  struct Job {
    std::size_t policy;
    std::size_t param;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (std::size_t s = 0; s < seeds.size(); ++s) jobs.push_back({p, g, s});
    }
  }

  struct Row {
    double delta = 0.0;
    double refresh_ratio = 0.0;
    double psnr_db = 0.0;
  };
  std::vector<Row> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::string failure_context;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        const auto draw = draw_seed(testbed, seeds[job.seed]);
        const auto run = run_policy(testbed, policies[job.policy], grid[job.param], draw, opts.xi, false);
        rows[i] = {run.delta, run.trace.refresh_ratio(),
                   psnr(run.final_sample, full_compute_sample(testbed, draw, opts.xi))};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
          failure_context = "policy " + policies[job.policy].name + ", seed " +
                            std::to_string(seeds[job.seed]);
        }
        next = jobs.size();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads =
      std::min<std::size_t>(jobs.size(), opts.threads > 0 ? static_cast<std::size_t>(opts.threads) : hw);
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(failure_context + ": " + e.what());
    } catch (const CapabilityError& e) {
      throw CapabilityError(failure_context + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(failure_context + ": " + e.what());
    }
  }

  // Jobs are enumerated in (policy, parameter, seed) order, so rows come out
  // sorted regardless of which thread finished first.
  CsvWriter csv(out, {"seed", "policy", "delta", "refresh_ratio", "psnr_db"});
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    csv.row(seeds[jobs[i].seed], policies[jobs[i].policy].name, rows[i].delta, rows[i].refresh_ratio,
            rows[i].psnr_db);
  }

  json j = common_json(opts, testbed.grid().shape(), testbed.prior());
  j["seeds"] = seeds;
  json pj = json::array();
  for (const auto& p : policies) {
    json entry = {{"name", p.name}};
    if (p.kind == PolicyKind::Metric && p.metric.tag == MetricTag::LpfCutoff) {
      entry["cutoff"] = p.metric.cutoff_fraction;
    }
    if (p.kind == PolicyKind::Metric && p.metric.tag == MetricTag::PolyFitted) {
      entry["poly_coeffs"] = p.metric.poly_coeffs;
      entry["calibration_seed"] = kPolyCalibrationSeed;
    }
    pj.push_back(entry);
  }
  j["policies"] = pj;
  if (!opts.delta.empty()) j["delta"] = opts.delta;
  if (!opts.target_ratio.empty()) j["target_ratio"] = opts.target_ratio;
  return j;
}

json cmd_replay(const Options& opts, std::ostream& out) {
  if (opts.traj.empty()) throw InvalidArgument("replay needs --traj");
  const Trajectory traj = read_trajectory(opts.traj);
  const FilterBank bank = trajectory_bank(traj, opts);
  const auto kinds = resolve_kinds(opts);
  const FeatureSide side = parse_side(opts.feature);
  const auto series = replay_distances(traj, bank, kinds, side, opts.xi);
  write_distance_csv(out, series);

  json j = {{"traj", opts.traj},
            {"feature", to_string(side)},
            {"kinds", kinds_json(kinds)},
            {"schedule", to_string(traj.schedule_kind)},
            {"steps", traj.steps_total},
            {"beta", bank.prior().beta},
            {"amp", bank.prior().amplitude},
            {"shape", shape_json(traj.shape())},
            {"channels", traj.channels},
            {"xi", opts.xi}};
  if (!opts.poly_coeffs.empty()) j["poly_coeffs"] = opts.poly_coeffs;

  if (!opts.target_ratio.empty()) {
    if (opts.oracle_out.empty()) throw InvalidArgument("--target-ratio in replay needs --oracle-out");
    const std::vector<MetricKind> oracle_kinds{MetricKind::sea(), MetricKind::raw()};
    const auto oracle_series = replay_distances(traj, bank, oracle_kinds, FeatureSide::Output, opts.xi);
    std::vector<LabelledTrace> traces;
    for (double ratio : opts.target_ratio) {
      for (std::size_t k = 0; k < oracle_series.size(); ++k) {
        const auto search = delta_for_target_ratio(oracle_series[k], ratio);
        traces.push_back({std::string(k == 0 ? "oracle-sea@" : "oracle-raw@") + format_double(ratio),
                          search.delta, simulate_gate(oracle_series[k], search.delta)});
      }
    }
    auto file = open_output(opts.oracle_out);
    write_gate_trace_csv(file, traces);
    j["target_ratio"] = opts.target_ratio;
    j["oracle_out"] = opts.oracle_out;
  }
  return j;
}

json cmd_gate_trace(const Options& opts, std::ostream& out) {
  if (!opts.series.empty() && !opts.traj.empty()) {
    throw InvalidArgument("--series and --traj are mutually exclusive");
  }
  const auto grid = param_grid(opts, true);
  std::vector<LabelledTrace> traces;
  json j = {{"xi", opts.xi}};

  if (!opts.series.empty()) {
    std::ifstream file(opts.series);
    if (!file) throw IoError("cannot open '" + opts.series + "'");
    traces = gate_series(read_distance_csv(file), grid);
    j["series"] = opts.series;
  } else if (!opts.traj.empty()) {
    const Trajectory traj = read_trajectory(opts.traj);
    const FilterBank bank = trajectory_bank(traj, opts);
    const auto kinds = opts.kinds.empty() ? std::vector<MetricKind>{MetricKind::sea()} : resolve_kinds(opts);
    const FeatureSide side = parse_side(opts.feature);
    traces = gate_series(replay_distances(traj, bank, kinds, side, opts.xi), grid);
    j["traj"] = opts.traj;
    j["feature"] = to_string(side);
    j["kinds"] = kinds_json(kinds);
  } else {
    // Live synthetic runs, one trace per (policy, parameter, seed).
    const Testbed testbed = make_testbed(opts);
    const auto seeds = resolve_seeds(opts, 1);
    const std::vector<std::string> names =
        opts.policy.empty() ? std::vector<std::string>{"sea"} : opts.policy;
    json pj = json::array();
    for (const auto& name : names) {
      const auto spec = parse_policy(name, opts);
      if (spec.kind == PolicyKind::Metric && spec.metric.poly_coeffs.empty() &&
          spec.metric.tag == MetricTag::PolyFitted) {
        throw InvalidArgument("gate-trace with the poly policy needs --poly-coeffs");
      }
      pj.push_back(spec.name);
      for (const auto& p : grid) {
        for (auto seed : seeds) {
          const auto draw = draw_seed(testbed, seed);
          auto run = run_policy(testbed, spec, p, draw, opts.xi, false);
          traces.push_back({"seed=" + std::to_string(seed) + ":" + spec.name, run.delta, std::move(run.trace)});
        }
      }
    }
    j.update(common_json(opts, testbed.grid().shape(), testbed.prior()));
    j["seeds"] = seeds;
    j["policies"] = pj;
  }

  write_gate_trace_csv(out, traces);
  if (!opts.heatmap.empty()) {
    auto file = open_output(opts.heatmap);
    write_heatmap_csv(file, refresh_heatmap(traces));
    j["heatmap"] = opts.heatmap;
  }
  if (!opts.summary.empty()) {
    auto file = open_output(opts.summary);
    write_summary_csv(file, traces);
    j["summary"] = opts.summary;
  }
  if (!opts.delta.empty()) j["delta"] = opts.delta;
  if (!opts.target_ratio.empty()) j["target_ratio"] = opts.target_ratio;
  return j;
}

json cmd_simulate(const Options& opts, std::ostream& out) {
  if (opts.traj.empty()) throw InvalidArgument("simulate needs --traj for the exported trajectory");
  if (opts.policy.size() > 1) throw InvalidArgument("simulate takes a single --policy");
  const Testbed testbed = make_testbed(opts);
  const auto seeds = resolve_seeds(opts, 1);
  if (seeds.size() != 1) throw InvalidArgument("simulate takes a single seed");
  const auto spec = parse_policy(opts.policy.empty() ? "full" : opts.policy.front(), opts);
  if (spec.kind == PolicyKind::Metric && spec.metric.tag == MetricTag::PolyFitted &&
      spec.metric.poly_coeffs.empty()) {
    throw InvalidArgument("simulate with the poly policy needs --poly-coeffs");
  }
  const auto grid = param_grid(opts, spec.kind != PolicyKind::FullCompute);
  if (grid.size() > 1) throw InvalidArgument("simulate takes a single --delta or --target-ratio");
  const ParamPoint param = grid.empty() ? ParamPoint{false, 0.0} : grid.front();

  const auto draw = draw_seed(testbed, seeds.front());
  const auto run = run_policy(testbed, spec, param, draw, opts.xi, true);
  write_trajectory(trajectory_from_run(run, testbed), opts.traj);

  // Live series: what the gate saw; for full compute, input-side series of
  // the requested kinds.
  std::vector<DistanceSeries> series;
  if (spec.kind == PolicyKind::FullCompute) {
    const auto kinds = opts.kinds.empty() ? std::vector<MetricKind>{MetricKind::sea()} : resolve_kinds(opts);
    for (const auto& kind : kinds) series.push_back(input_distances(run, testbed, kind, opts.xi));
  } else {
    series.push_back(run.distances);
  }
  write_distance_csv(out, series);

  json j = common_json(opts, testbed.grid().shape(), testbed.prior());
  j["seed"] = seeds.front();
  j["policy"] = spec.name;
  j["delta"] = run.delta;
  j["refresh_ratio"] = run.trace.refresh_ratio();
  j["psnr_db"] = psnr(run.final_sample, full_compute_sample(testbed, draw, opts.xi));
  j["traj"] = opts.traj;
  return j;
}

}  // namespace seacache::cli
