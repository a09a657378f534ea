#include "seacache/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "seacache/errors.hpp"

namespace seacache::cli {

namespace {

void add_model_flags(CLI::App& cmd, Options& o) {
  cmd.add_option("--schedule", o.schedule, "Noise schedule")
      ->check(CLI::IsMember({"rf", "dpm-linear", "dpm-cosine"}));
  cmd.add_option("--steps", o.steps, "Sampling steps T")->check(CLI::PositiveNumber);
  cmd.add_option("--beta", o.beta, "Power-law exponent (default 2 for 2D, 3 for 3D)");
  cmd.add_option("--amp", o.amp, "Power-law amplitude");
  cmd.add_option("--height", o.height, "Grid height")->check(CLI::PositiveNumber);
  cmd.add_option("--width", o.width, "Grid width")->check(CLI::PositiveNumber);
  cmd.add_option("--frames", o.frames, "Frames; makes the grid volumetric")->check(CLI::PositiveNumber);
  cmd.add_option("--channels", o.channels, "Feature channels")->check(CLI::PositiveNumber);
}

void add_threshold_flags(CLI::App& cmd, Options& o) {
  auto* delta = cmd.add_option("--delta", o.delta, "Gate threshold(s)")->delimiter(',');
  auto* ratio = cmd.add_option("--target-ratio", o.target_ratio, "Target refresh ratio(s)")->delimiter(',');
  delta->excludes(ratio);
}

void add_seed_flags(CLI::App& cmd, Options& o) {
  auto* seeds = cmd.add_option("--seeds", o.seeds, "Use seeds 0..N-1");
  auto* list = cmd.add_option("--seed-list", o.seed_list, "Explicit seeds")->delimiter(',');
  seeds->excludes(list);
}

void add_metric_flags(CLI::App& cmd, Options& o) {
  cmd.add_option("--xi", o.xi, "Relative-L1 stabilizer")->check(CLI::NonNegativeNumber);
  cmd.add_option("--cutoff", o.cutoff, "LPF cutoff as a fraction of the max radius");
  cmd.add_option("--poly-degree", o.poly_degree, "Degree of the fitted polynomial")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--poly-coeffs", o.poly_coeffs, "Polynomial coefficients, low to high degree")
      ->delimiter(',');
}

void add_io_flags(CLI::App& cmd, Options& o) {
  cmd.add_option("--out", o.out, "CSV output path (default stdout)");
  cmd.add_option("--manifest", o.manifest, "Manifest path (default <out>.manifest.json)");
}

std::string default_manifest(const Options& o) {
  if (!o.manifest.empty()) return o.manifest;
  if (!o.out.empty()) return o.out + ".manifest.json";
  return "seacache-" + o.subcommand + ".manifest.json";
}

nlohmann::json dispatch(const Options& o, std::ostream& out) {
  if (o.subcommand == "filterbank") return cmd_filterbank(o, out);
  if (o.subcommand == "sweep") return cmd_sweep(o, out);
  if (o.subcommand == "replay") return cmd_replay(o, out);
  if (o.subcommand == "gate-trace") return cmd_gate_trace(o, out);
  if (o.subcommand == "simulate") return cmd_simulate(o, out);
  throw InvalidArgument("unknown subcommand '" + o.subcommand + "'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"SeaCache scheduling tools", "seacache"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  auto* filterbank = app.add_subcommand("filterbank", "Radial profiles of the filter bank");
  add_model_flags(*filterbank, o);
  add_io_flags(*filterbank, o);
  filterbank->add_option("--t", o.t, "Timesteps (default all)")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "Refresh ratio and PSNR over policies and seeds");
  add_model_flags(*sweep, o);
  add_threshold_flags(*sweep, o);
  add_seed_flags(*sweep, o);
  add_metric_flags(*sweep, o);
  add_io_flags(*sweep, o);
  sweep->add_option("--policy", o.policy, "Policies")->delimiter(',');
  sweep->add_option("--threads", o.threads, "Worker threads (default all cores)");

  auto* replay = app.add_subcommand("replay", "Distance curves of a recorded trajectory");
  add_metric_flags(*replay, o);
  add_io_flags(*replay, o);
  replay->add_option("--traj", o.traj, "SEATRAJ file")->required();
  replay->add_option("--beta", o.beta, "Power-law exponent of the filter prior");
  replay->add_option("--amp", o.amp, "Power-law amplitude of the filter prior");
  replay->add_option("--kinds", o.kinds, "Metric kinds or 'all'")->delimiter(',');
  replay->add_option("--feature", o.feature, "input or output")->check(CLI::IsMember({"input", "output"}));
  replay->add_option("--target-ratio", o.target_ratio, "Oracle target ratio(s)")->delimiter(',');
  replay->add_option("--oracle-out", o.oracle_out, "Oracle schedule CSV path");

  auto* gate = app.add_subcommand("gate-trace", "Per-step gate decisions and refresh heatmap");
  add_model_flags(*gate, o);
  add_threshold_flags(*gate, o);
  add_seed_flags(*gate, o);
  add_metric_flags(*gate, o);
  add_io_flags(*gate, o);
  gate->add_option("--series", o.series, "Distance CSV (t,kind,value)");
  gate->add_option("--traj", o.traj, "SEATRAJ file");
  gate->add_option("--kinds", o.kinds, "Metric kinds for --traj")->delimiter(',');
  gate->add_option("--feature", o.feature, "input or output")->check(CLI::IsMember({"input", "output"}));
  gate->add_option("--policy", o.policy, "Policies for synthetic runs")->delimiter(',');
  gate->add_option("--heatmap", o.heatmap, "Per-timestep refresh fraction CSV path");
  gate->add_option("--summary", o.summary, "Per-trace summary CSV path");

  auto* simulate = app.add_subcommand("simulate", "Export a synthetic run as SEATRAJ");
  add_model_flags(*simulate, o);
  add_threshold_flags(*simulate, o);
  add_seed_flags(*simulate, o);
  add_metric_flags(*simulate, o);
  add_io_flags(*simulate, o);
  simulate->add_option("--policy", o.policy, "Policy (default full)")->delimiter(',');
  simulate->add_option("--traj", o.traj, "Output SEATRAJ path")->required();
  simulate->add_option("--kinds", o.kinds, "Series kinds for full compute")->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  o.subcommand = app.get_subcommands().front()->get_name();

  try {
    nlohmann::json resolved;
    if (o.out.empty()) {
      resolved = dispatch(o, out);
    } else {
      std::ofstream file(o.out, std::ios::trunc);
      if (!file) throw IoError("cannot open '" + o.out + "' for writing");
      resolved = dispatch(o, file);
      if (!file) throw IoError("failed writing '" + o.out + "'");
    }
    nlohmann::json manifest = {{"subcommand", o.subcommand},
                               {"tool_version", kToolVersion},
                               {"out", o.out.empty() ? "-" : o.out},
                               {"parameters", resolved}};
    const std::string path = default_manifest(o);
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw IoError("cannot open manifest '" + path + "' for writing");
    file << manifest.dump(2) << '\n';
    return kExitOk;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IndexError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CapabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitCapability;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitCapability;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitCapability;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace seacache::cli
