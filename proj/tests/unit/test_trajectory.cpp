#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "seacache/errors.hpp"
#include "seacache/trajectory.hpp"

using namespace seacache;

namespace {

constexpr std::size_t kHeaderBytes = 30;

FeatureTensor f32_tensor(std::size_t channels, const GridShape& shape, std::uint64_t seed) {
  auto t = oracle::random_tensor(channels, shape, seed);
  round_to_float32(t);
  return t;
}

Trajectory small_trajectory(std::uint8_t flags = kHasInput | kHasOutput) {
  Trajectory traj;
  traj.rank = 2;
  traj.channels = 2;
  traj.height = 4;
  traj.width = 6;
  traj.steps_total = 5;
  const auto s = make_rf_schedule(5);
  for (double v : s.a_values()) traj.a.push_back(static_cast<float>(v));
  for (double v : s.b_values()) traj.b.push_back(static_cast<float>(v));
  for (std::uint32_t t = 5; t-- > 0;) {
    TrajectoryStep step;
    step.t = t;
    if (flags & kHasInput) step.input = f32_tensor(2, traj.shape(), 10 + t);
    if (flags & kHasOutput) step.output = f32_tensor(2, traj.shape(), 20 + t);
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

bool same(const Trajectory& x, const Trajectory& y) {
  if (x.rank != y.rank || x.channels != y.channels || x.frames != y.frames || x.height != y.height ||
      x.width != y.width || x.steps_total != y.steps_total || x.schedule_kind != y.schedule_kind ||
      x.steps.size() != y.steps.size()) {
    return false;
  }
  if (std::memcmp(x.a.data(), y.a.data(), x.a.size() * 4) != 0) return false;
  if (std::memcmp(x.b.data(), y.b.data(), x.b.size() * 4) != 0) return false;
  for (std::size_t i = 0; i < x.steps.size(); ++i) {
    if (x.steps[i].t != y.steps[i].t || x.steps[i].input != y.steps[i].input ||
        x.steps[i].output != y.steps[i].output) {
      return false;
    }
  }
  return true;
}

std::string format_error(std::span<const std::uint8_t> bytes) {
  try {
    decode_trajectory(bytes);
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

const Testbed& testbed() {
  static const Testbed bed =
      Testbed::make(ScheduleKind::RectifiedFlow, 20, GridShape::planar(16, 16), 2, {1.0, 2.0});
  return bed;
}

SamplerRun recorded_run(const CachePolicy& policy, std::uint64_t seed) {
  const auto d = draw_seed(testbed(), seed);
  return run_sampler({&testbed(), policy, kDefaultXi, seed, true}, d.x0, d.noise);
}

}  // namespace

TEST_CASE("encoded size follows the layout") {
  const auto traj = small_trajectory();
  const auto bytes = encode_trajectory(traj);
  const std::size_t points = 2 * 4 * 6;
  CHECK(bytes.size() == kHeaderBytes + 2 * 6 * 4 + 5 * (5 + 2 * 4 * points));
  CHECK(std::memcmp(bytes.data(), "SEAT", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 2);
  // T is little-endian at offset 25.
  CHECK(bytes[25] == 5);
  CHECK(bytes[26] == 0);
  CHECK(bytes[29] == static_cast<std::uint8_t>(ScheduleKind::RectifiedFlow));
}

TEST_CASE("round trip is bitwise lossless") {
  for (std::uint8_t flags : {std::uint8_t{1}, std::uint8_t{2}, std::uint8_t{3}}) {
    const auto traj = small_trajectory(flags);
    const auto bytes = encode_trajectory(traj);
    const auto back = decode_trajectory(bytes);
    CHECK(same(traj, back));
    CHECK(encode_trajectory(back) == bytes);
  }
}

TEST_CASE("round trip through a file") {
  const auto path = std::filesystem::temp_directory_path() / "seacache_roundtrip.seatraj";
  const auto traj = small_trajectory();
  write_trajectory(traj, path);
  CHECK(same(read_trajectory(path), traj));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_trajectory(path), IoError);
  CHECK_THROWS_AS(write_trajectory(traj, "/nonexistent-dir/x.seatraj"), IoError);
}

TEST_CASE("volumetric trajectories round trip") {
  Trajectory traj;
  traj.rank = 3;
  traj.channels = 1;
  traj.frames = 3;
  traj.height = 4;
  traj.width = 4;
  traj.steps_total = 2;
  traj.schedule_kind = ScheduleKind::DpmCosine;
  const auto s = make_dpm_schedule(ScheduleKind::DpmCosine, 2);
  for (double v : s.a_values()) traj.a.push_back(static_cast<float>(v));
  for (double v : s.b_values()) traj.b.push_back(static_cast<float>(v));
  traj.steps.push_back({2, f32_tensor(1, traj.shape(), 1), std::nullopt});
  traj.steps.push_back({0, std::nullopt, f32_tensor(1, traj.shape(), 2)});
  CHECK(same(decode_trajectory(encode_trajectory(traj)), traj));
  CHECK(traj.shape() == GridShape::volumetric(3, 4, 4));
  CHECK(traj.points() == 48);
}

TEST_CASE("header-only file is valid with no records") {
  auto traj = small_trajectory();
  traj.steps.clear();
  const auto bytes = encode_trajectory(traj);
  CHECK(bytes.size() == kHeaderBytes + 2 * 6 * 4);
  const auto back = decode_trajectory(bytes);
  CHECK(back.steps.empty());
  const auto replay = replay_distances(back, FilterBank(make_rf_schedule(5), RadialGrid(back.shape()), {}),
                                       std::vector<MetricKind>{MetricKind::sea()}, FeatureSide::Input);
  CHECK(replay.front().size() == 0);
}

TEST_CASE("truncation names the record being read") {
  const auto bytes = encode_trajectory(small_trajectory());
  const std::size_t record_bytes = 5 + 2 * 4 * 48;
  const std::size_t first = kHeaderBytes + 48;
  // Cut inside the input tensor of record 2.
  const std::size_t cut = first + 2 * record_bytes + 5 + 10;
  const auto why = format_error(std::span(bytes).first(cut));
  CHECK(why.find("record 2 input") != std::string::npos);
  // Cut inside a record header.
  CHECK(format_error(std::span(bytes).first(first + 3)).find("record 0 header") != std::string::npos);
  // Cut inside the fixed header.
  CHECK_FALSE(format_error(std::span(bytes).first(10)).empty());
  CHECK_FALSE(format_error(std::span(bytes).first(0)).empty());
}

TEST_CASE("malformed headers are rejected with offsets") {
  const auto good = encode_trajectory(small_trajectory());
  auto patched = [&](std::size_t at, std::uint8_t v) {
    auto b = good;
    b[at] = v;
    return b;
  };
  CHECK(format_error(patched(0, 'X')).find("magic") != std::string::npos);
  CHECK(format_error(patched(4, 2)).find("version") != std::string::npos);
  CHECK(format_error(patched(8, 4)).find("rank") != std::string::npos);
  CHECK(format_error(patched(29, 9)).find("schedule kind") != std::string::npos);
  // F = 2 on a planar file.
  CHECK(format_error(patched(13, 2)).find("F = 1") != std::string::npos);
  // T = 0.
  CHECK(format_error(patched(25, 0)).find("T must be positive") != std::string::npos);
  // Huge T cannot fit its schedule arrays.
  CHECK(format_error(patched(28, 0x7f)).find("exceed") != std::string::npos);
  try {
    decode_trajectory(patched(4, 2));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("record ordering and flags are enforced") {
  const auto good = encode_trajectory(small_trajectory());
  const std::size_t first = kHeaderBytes + 48;
  const std::size_t record_bytes = 5 + 2 * 4 * 48;
  SUBCASE("descending t") {
    auto b = good;
    b[first + record_bytes] = 7;  // record 1 claims t = 7 > T
    CHECK(format_error(b).find("record 1 has t > T") != std::string::npos);
    b[first + record_bytes] = 4;  // equal to record 0
    CHECK(format_error(b).find("record 1 breaks strictly descending t") != std::string::npos);
  }
  SUBCASE("unknown flags") {
    auto b = good;
    b[first + 4] = 0x7;
    CHECK(format_error(b).find("record 0 has unknown flag bits") != std::string::npos);
  }
}

TEST_CASE("write refuses invalid trajectories") {
  auto traj = small_trajectory();
  std::swap(traj.steps[0], traj.steps[1]);
  CHECK_THROWS_AS(traj.validate(), InvalidArgument);
  CHECK_THROWS_AS(encode_trajectory(traj), InvalidArgument);
  auto short_sched = small_trajectory();
  short_sched.a.pop_back();
  CHECK_THROWS_AS(short_sched.validate(), InvalidArgument);
  auto wrong_shape = small_trajectory();
  wrong_shape.steps[0].input = f32_tensor(1, wrong_shape.shape(), 1);
  CHECK_THROWS_AS(wrong_shape.validate(), InvalidArgument);
}

TEST_CASE("random corruption never crashes the decoder") {
  const auto good = encode_trajectory(small_trajectory());
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pos(0, good.size() - 1);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int trial = 0; trial < 2000; ++trial) {
    auto b = good;
    for (int k = 0; k < 1 + trial % 4; ++k) b[pos(rng)] = static_cast<std::uint8_t>(byte(rng));
    if (trial % 3 == 0) b.resize(pos(rng));
    try {
      const auto traj = decode_trajectory(b);
      CHECK_NOTHROW(traj.validate());
    } catch (const FormatError&) {
    }
  }
}

TEST_CASE("stored schedule maps back to the preset") {
  for (auto kind : {ScheduleKind::RectifiedFlow, ScheduleKind::DpmLinear, ScheduleKind::DpmCosine}) {
    const auto bed = Testbed::make(kind, 10, GridShape::planar(8, 8), 1, {1.0, 2.0});
    const auto d = draw_seed(bed, 1);
    const auto run = run_sampler({&bed, {}, kDefaultXi, 1, true}, d.x0, d.noise);
    const auto traj = trajectory_from_run(run, bed);
    const auto s = trajectory_schedule(traj);
    CHECK(s.a_values() == bed.schedule.a_values());
    CHECK(s.b_values() == bed.schedule.b_values());
  }
  // Perturbed coefficients are wrapped, not snapped.
  auto traj = small_trajectory();
  traj.a[2] = 0.59f;
  traj.b[2] = 0.41f;
  const auto s = trajectory_schedule(traj);
  CHECK(s.a(2) == static_cast<double>(0.59f));
}

TEST_CASE("recorded runs package every step") {
  const auto run = recorded_run(CachePolicy::full_compute(), 3);
  const auto traj = trajectory_from_run(run, testbed());
  CHECK(traj.steps.size() == 20);
  CHECK(traj.steps.front().t == 20);
  CHECK(traj.steps.back().t == 1);
  CHECK(traj.channels == 2);
  CHECK_NOTHROW(traj.validate());
  const auto unrecorded = run_sampler({&testbed(), {}, kDefaultXi, 3, false}, run.inputs[0], run.inputs[0]);
  CHECK_THROWS_AS(trajectory_from_run(unrecorded, testbed()), CapabilityError);
}

TEST_CASE("replay reproduces live distance series") {
  const std::vector<MetricKind> kinds{MetricKind::raw(), MetricKind::sea(), MetricKind::one_minus_sea(),
                                      MetricKind::sea_unnormalized(), MetricKind::lpf(),
                                      MetricKind::poly({0.01, 1.2})};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto full = recorded_run(CachePolicy::full_compute(), seed);
    const auto traj = decode_trajectory(encode_trajectory(trajectory_from_run(full, testbed())));
    const FilterBank bank(trajectory_schedule(traj), RadialGrid(traj.shape()), {1.0, 2.0});
    const auto in = replay_distances(traj, bank, kinds, FeatureSide::Input);
    const auto out = replay_distances(traj, bank, kinds, FeatureSide::Output);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const auto live_in = input_distances(full, testbed(), kinds[k]);
      const auto live_out = output_distances(full, testbed(), kinds[k]);
      REQUIRE(in[k].size() == live_in.size());
      CHECK(in[k].timesteps == live_in.timesteps);
      CHECK(out[k].timesteps == live_out.timesteps);
      for (std::size_t i = 0; i < live_in.size(); ++i) {
        CHECK(std::abs(in[k].values[i] - live_in.values[i]) <= 1e-9);
        CHECK(std::abs(out[k].values[i] - live_out.values[i]) <= 1e-9);
      }
    }
    // A gated run's own series replays from its recording too.
    const auto gated = recorded_run(CachePolicy::gated(MetricKind::sea(), 0.2), seed);
    const auto gtraj = trajectory_from_run(gated, testbed());
    const auto g = replay_distances(gtraj, bank, std::vector<MetricKind>{MetricKind::sea()}, FeatureSide::Input);
    for (std::size_t i = 0; i < gated.distances.size(); ++i) {
      CHECK(std::abs(g[0].values[i] - gated.distances.values[i]) <= 1e-9);
    }
  }
}

TEST_CASE("replay labels pairs by the lower timestep and handles gaps") {
  auto traj = small_trajectory();
  traj.steps.erase(traj.steps.begin() + 1);  // t = 5, 3, 2, 1, 0 -> 4, 2, 1, 0
  const FilterBank bank(make_rf_schedule(5), RadialGrid(traj.shape()), {1.0, 2.0});
  const auto r = replay_distances(traj, bank, std::vector<MetricKind>{MetricKind::raw()}, FeatureSide::Input);
  CHECK(r[0].timesteps == std::vector<int>{2, 1, 0});
  CHECK(r[0].values[0] == rel_l1(*traj.steps[1].input, *traj.steps[0].input));
}

TEST_CASE("constant trajectory replays to zeros") {
  auto traj = small_trajectory();
  const auto constant = f32_tensor(2, traj.shape(), 99);
  for (auto& step : traj.steps) step.input = constant;
  const FilterBank bank(make_rf_schedule(5), RadialGrid(traj.shape()), {1.0, 0.0});
  const auto r = replay_distances(traj, bank, std::vector<MetricKind>{MetricKind::raw(), MetricKind::sea()},
                                  FeatureSide::Input);
  for (const auto& s : r) {
    for (double v : s.values) CHECK(v <= 1e-12);
  }
}

TEST_CASE("missing features raise capability errors") {
  const auto traj = small_trajectory(kHasInput);
  const FilterBank bank(make_rf_schedule(5), RadialGrid(traj.shape()), {1.0, 2.0});
  const std::vector<MetricKind> kinds{MetricKind::sea()};
  CHECK_NOTHROW(replay_distances(traj, bank, kinds, FeatureSide::Input));
  try {
    replay_distances(traj, bank, kinds, FeatureSide::Output);
    FAIL("expected CapabilityError");
  } catch (const CapabilityError& e) {
    CHECK(std::string(e.what()).find("t=4,3,2,1,0") != std::string::npos);
  }
  const FilterBank wrong(make_rf_schedule(5), RadialGrid(GridShape::planar(6, 4)), {1.0, 2.0});
  CHECK_THROWS_AS(replay_distances(traj, wrong, kinds, FeatureSide::Input), InvalidArgument);
  const FilterBank shorter(make_rf_schedule(3), RadialGrid(traj.shape()), {1.0, 2.0});
  CHECK_THROWS_AS(replay_distances(traj, shorter, kinds, FeatureSide::Input), InvalidArgument);
}

TEST_CASE("feature side names") {
  CHECK(to_string(FeatureSide::Input) == "input");
  CHECK(to_string(FeatureSide::Output) == "output");
}
