#include "seacache/report.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "seacache/errors.hpp"

namespace seacache {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header)
    : out_(&out), columns_(header.size()) {
  if (header.empty()) throw InvalidArgument("CSV header must not be empty");
  write(header);
}

void CsvWriter::write(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw InvalidArgument("CSV row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) *out_ << ',';
    *out_ << cells[i];
  }
  *out_ << '\n';
}

void write_distance_csv(std::ostream& out, std::span<const DistanceSeries> series) {
  CsvWriter csv(out, {"t", "kind", "value"});
  for (const auto& s : series) {
    const auto name = tag_name(s.kind.tag);
    for (std::size_t i = 0; i < s.size(); ++i) csv.row(s.timesteps[i], name, s.values[i]);
  }
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line_no) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw InvalidArgument("line " + std::to_string(line_no) + ": bad number '" + text + "'");
  }
  return value;
}

MetricKind kind_from_tag(MetricTag tag) {
  switch (tag) {
    case MetricTag::Raw: return MetricKind::raw();
    case MetricTag::Sea: return MetricKind::sea();
    case MetricTag::OneMinusSea: return MetricKind::one_minus_sea();
    case MetricTag::SeaUnnormalized: return MetricKind::sea_unnormalized();
    case MetricTag::LpfCutoff: return MetricKind::lpf();
    case MetricTag::PolyFitted: return MetricKind{MetricTag::PolyFitted, 0.0, {}};
  }
  return MetricKind::sea();
}

}  // namespace

std::vector<DistanceSeries> read_distance_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw InvalidArgument("distance CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,kind,value") throw InvalidArgument("distance CSV header must be 't,kind,value'");

  std::vector<DistanceSeries> out;
  std::map<std::string, std::size_t, std::less<>> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != 3) {
      throw InvalidArgument("line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const int t = parse_number<int>(cells[0], line_no);
    const double value = parse_number<double>(cells[2], line_no);
    auto it = index.find(cells[1]);
    if (it == index.end()) {
      MetricTag tag;
      try {
        tag = parse_metric_tag(cells[1]);
      } catch (const InvalidArgument&) {
        throw InvalidArgument("line " + std::to_string(line_no) + ": unknown kind '" + cells[1] + "'");
      }
      it = index.emplace(cells[1], out.size()).first;
      out.push_back(DistanceSeries{kind_from_tag(tag), {}, {}});
    }
    try {
      out[it->second].push(t, value);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_filterbank_csv(std::ostream& out, const FilterBank& bank, std::span<const int> timesteps) {
  CsvWriter csv(out, {"t", "bin", "radius", "gain_raw", "gain_norm"});
  const auto& grid = bank.grid();
  for (int t : timesteps) {
    const auto raw = grid.bin_average(bank.raw(t));
    const auto norm = grid.bin_average(bank.normalized(t));
    for (std::size_t k = 0; k < grid.bins(); ++k) {
      csv.row(t, k, grid.bin_radius(k), raw[k], norm[k]);
    }
  }
}

void write_gate_trace_csv(std::ostream& out, std::span<const LabelledTrace> traces) {
  CsvWriter csv(out, {"run", "delta", "t", "decision", "accumulator_after"});
  for (const auto& lt : traces) {
    const auto& tr = lt.trace;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      csv.row(lt.run, lt.delta, tr.timesteps[i], to_string(tr.decisions[i]), tr.accumulator_after[i]);
    }
  }
}

RefreshHeatmap refresh_heatmap(std::span<const LabelledTrace> traces) {
  std::map<int, std::pair<std::size_t, std::size_t>, std::greater<>> counts;
  for (const auto& lt : traces) {
    for (std::size_t i = 0; i < lt.trace.size(); ++i) {
      auto& [hits, total] = counts[lt.trace.timesteps[i]];
      ++total;
      if (lt.trace.decisions[i] == CacheDecision::Refresh) ++hits;
    }
  }
  RefreshHeatmap heatmap;
  for (const auto& [t, c] : counts) {
    heatmap.timesteps.push_back(t);
    heatmap.refresh_fraction.push_back(static_cast<double>(c.first) / static_cast<double>(c.second));
  }
  return heatmap;
}

void write_heatmap_csv(std::ostream& out, const RefreshHeatmap& heatmap) {
  CsvWriter csv(out, {"t", "refresh_fraction"});
  for (std::size_t i = 0; i < heatmap.timesteps.size(); ++i) {
    csv.row(heatmap.timesteps[i], heatmap.refresh_fraction[i]);
  }
}

double early_refresh_share(const GateTrace& trace) {
  if (trace.size() == 0) return 0.0;
  const auto [lo, hi] = std::minmax_element(trace.timesteps.begin(), trace.timesteps.end());
  const double mid = 0.5 * (static_cast<double>(*lo) + static_cast<double>(*hi));
  std::size_t early = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.decisions[i] != CacheDecision::Refresh) continue;
    ++total;
    if (trace.timesteps[i] > mid) ++early;
  }
  return total == 0 ? 0.0 : static_cast<double>(early) / static_cast<double>(total);
}

}  // namespace seacache
