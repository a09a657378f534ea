#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "seacache/errors.hpp"
#include "seacache/report.hpp"

using namespace seacache;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

GateTrace trace_of(std::vector<int> t, std::vector<bool> refresh) {
  GateTrace trace;
  for (std::size_t i = 0; i < t.size(); ++i) {
    trace.push(t[i], refresh[i] ? CacheDecision::Refresh : CacheDecision::Reuse, 0.0);
  }
  return trace;
}

}  // namespace

TEST_CASE("format_double round trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-10) == "-2.5e-10");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("csv writer enforces the header width") {
  std::ostringstream out;
  CsvWriter csv(out, {"a", "b", "c"});
  csv.row(1, 0.5, "x");
  CHECK(out.str() == "a,b,c\n1,0.5,x\n");
  CHECK_THROWS_AS(csv.row(1, 2), InvalidArgument);
}

TEST_CASE("distance csv round trips") {
  DistanceSeries sea{MetricKind::sea(), {}, {}};
  DistanceSeries raw{MetricKind::raw(), {}, {}};
  for (int t = 9; t >= 1; --t) {
    sea.push(t, 0.1 * t + 1e-17);
    raw.push(t, 1.0 / (t + 3));
  }
  const std::vector<DistanceSeries> all{sea, raw};
  std::ostringstream out;
  write_distance_csv(out, all);
  const auto rows = lines(out.str());
  CHECK(rows.front() == "t,kind,value");
  CHECK(rows.size() == 19);
  CHECK(rows[1].rfind("9,SEA,", 0) == 0);

  std::istringstream in(out.str());
  const auto back = read_distance_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].kind == MetricKind::sea());
  CHECK(back[0].values == sea.values);
  CHECK(back[0].timesteps == sea.timesteps);
  CHECK(back[1].kind == MetricKind::raw());
  CHECK(back[1].values == raw.values);
}

TEST_CASE("distance csv reader rejects malformed input") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_distance_csv(in);
  };
  CHECK_THROWS_AS(parse(""), InvalidArgument);
  CHECK_THROWS_AS(parse("t,value\n1,0.5\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("t,kind,value\n1,SEA\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("t,kind,value\nx,SEA,0.5\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("t,kind,value\n1,SEA,abc\n"), InvalidArgument);
  CHECK_THROWS_AS(parse("t,kind,value\n1,COSINE,0.5\n"), InvalidArgument);
  try {
    parse("t,kind,value\n2,SEA,0.5\n1,SEA,zz\n");
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(parse("t,kind,value\n").empty());
  // Windows line endings are tolerated.
  CHECK(parse("t,kind,value\r\n1,RAW,0.25\r\n").front().values == std::vector<double>{0.25});
}

TEST_CASE("filterbank csv has one row per timestep and bin") {
  const FilterBank bank(make_rf_schedule(10), RadialGrid(GridShape::planar(16, 16)), {1.0, 2.0});
  const std::vector<int> t{0, 5, 10};
  std::ostringstream out;
  write_filterbank_csv(out, bank, t);
  const auto rows = lines(out.str());
  CHECK(rows.front() == "t,bin,radius,gain_raw,gain_norm");
  CHECK(rows.size() == 1 + 3 * bank.grid().bins());
  CHECK(rows[1].rfind("0,0,0,", 0) == 0);
  CHECK_THROWS_AS(write_filterbank_csv(out, bank, std::vector<int>{11}), IndexError);
}

TEST_CASE("gate trace csv and heatmap") {
  const std::vector<LabelledTrace> traces{
      {"a", 0.3, trace_of({4, 3, 2, 1}, {true, false, true, false})},
      {"b", 0.5, trace_of({4, 3, 2, 1}, {true, true, false, false})},
  };
  std::ostringstream out;
  write_gate_trace_csv(out, traces);
  const auto rows = lines(out.str());
  CHECK(rows.front() == "run,delta,t,decision,accumulator_after");
  CHECK(rows.size() == 9);
  CHECK(rows[1] == "a,0.3,4,REFRESH,0");
  CHECK(rows[2] == "a,0.3,3,REUSE,0");

  const auto heat = refresh_heatmap(traces);
  CHECK(heat.timesteps == std::vector<int>{4, 3, 2, 1});
  CHECK(heat.refresh_fraction == std::vector<double>{1.0, 0.5, 0.5, 0.0});
  std::ostringstream hout;
  write_heatmap_csv(hout, heat);
  CHECK(lines(hout.str()) == std::vector<std::string>{"t,refresh_fraction", "4,1", "3,0.5", "2,0.5", "1,0"});
}

TEST_CASE("heatmap over traces with different timesteps") {
  const std::vector<LabelledTrace> traces{
      {"a", 0.1, trace_of({3, 2, 1}, {true, true, true})},
      {"b", 0.1, trace_of({5, 4}, {true, false})},
  };
  const auto heat = refresh_heatmap(traces);
  CHECK(heat.timesteps == std::vector<int>{5, 4, 3, 2, 1});
  CHECK(heat.refresh_fraction == std::vector<double>{1.0, 0.0, 1.0, 1.0, 1.0});
  CHECK(refresh_heatmap({}).timesteps.empty());
}

TEST_CASE("early refresh share") {
  // Range 1..10, midpoint 5.5: refreshes at 10 and 7 are early, 3 is late.
  std::vector<int> t;
  std::vector<bool> r;
  for (int s = 10; s >= 1; --s) {
    t.push_back(s);
    r.push_back(s == 10 || s == 7 || s == 3);
  }
  CHECK(early_refresh_share(trace_of(t, r)) == doctest::Approx(2.0 / 3.0));
  CHECK(early_refresh_share(GateTrace{}) == 0.0);
  CHECK(early_refresh_share(trace_of({4, 3}, {false, false})) == 0.0);
}
