#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seacache/gate.hpp"
#include "seacache/metric.hpp"
#include "seacache/spectrum.hpp"

namespace seacache {

/// Shortest decimal form that reads back to the same double.
std::string format_double(double value);

/// Comma-separated output with a mandatory header row.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);

  template <typename... Fields>
  void row(const Fields&... fields) {
    std::vector<std::string> cells{cell(fields)...};
    write(cells);
  }

 private:
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(std::string_view v) { return std::string(v); }
  static std::string cell(const char* v) { return v; }
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(unsigned v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(unsigned long long v) { return std::to_string(v); }
  void write(const std::vector<std::string>& cells);

  std::ostream* out_;
  std::size_t columns_;
};

/// `t,kind,value`, one row per series entry, series in the given order.
void write_distance_csv(std::ostream& out, std::span<const DistanceSeries> series);

/// Parses `t,kind,value` rows back into one series per kind (first-seen
/// order). Kind names are the CSV tag names; POLY_FITTED series carry no
/// coefficients. Throws InvalidArgument on malformed rows.
std::vector<DistanceSeries> read_distance_csv(std::istream& in);

/// Radial profile rows `t,bin,radius,gain_raw,gain_norm` (bin averages).
void write_filterbank_csv(std::ostream& out, const FilterBank& bank, std::span<const int> timesteps);

struct LabelledTrace {
  std::string run;
  double delta;
  GateTrace trace;
};

/// `run,delta,t,decision,accumulator_after`.
void write_gate_trace_csv(std::ostream& out, std::span<const LabelledTrace> traces);

/// Fraction of traces that refresh at each timestep, `t,refresh_fraction`,
/// in descending t.
struct RefreshHeatmap {
  std::vector<int> timesteps;
  std::vector<double> refresh_fraction;
};
RefreshHeatmap refresh_heatmap(std::span<const LabelledTrace> traces);
void write_heatmap_csv(std::ostream& out, const RefreshHeatmap& heatmap);

/// Share of a trace's refreshes that fall in the first half of sampling
/// (timesteps above the midpoint of the traced range).
double early_refresh_share(const GateTrace& trace);

}  // namespace seacache
