#include "seacache/trajectory.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "seacache/errors.hpp"

namespace seacache {

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

  void need(std::size_t n, const std::string& what) const {
    if (remaining() < n) {
      throw FormatError("truncated " + what + ": need " + std::to_string(n) + " bytes, have " +
                            std::to_string(remaining()),
                        pos_);
    }
  }
  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const std::string& what) { return std::bit_cast<float>(u32(what)); }
  std::span<const std::uint8_t> take(std::size_t n, const std::string& what) {
    need(n, what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_tensor(ByteWriter& out, const FeatureTensor& tensor) {
  for (double v : tensor.data()) out.f32(static_cast<float>(v));
}

FeatureTensor read_tensor(std::span<const std::uint8_t> payload, std::size_t channels,
                          const GridShape& shape) {
  std::vector<double> values(payload.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(payload[4 * i + k]) << (8 * k);
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return FeatureTensor(channels, shape, std::move(values));
}

bool known_schedule_kind(std::uint8_t value) {
  return value <= static_cast<std::uint8_t>(ScheduleKind::RectifiedFlow);
}

}  // namespace

std::string_view to_string(FeatureSide side) {
  return side == FeatureSide::Input ? "input" : "output";
}

GridShape Trajectory::shape() const {
  return rank == 3 ? GridShape::volumetric(frames, height, width) : GridShape::planar(height, width);
}

std::size_t Trajectory::points() const {
  return static_cast<std::size_t>(channels) * frames * height * width;
}

void Trajectory::validate() const {
  if (rank != 2 && rank != 3) throw InvalidArgument("trajectory rank must be 2 or 3");
  if (channels == 0 || frames == 0 || height == 0 || width == 0) {
    throw InvalidArgument("trajectory dims must be positive");
  }
  if (rank == 2 && frames != 1) throw InvalidArgument("2D trajectory must have F = 1");
  if (steps_total == 0) throw InvalidArgument("trajectory needs T >= 1");
  if (a.size() != steps_total + 1u || b.size() != steps_total + 1u) {
    throw InvalidArgument("trajectory schedule arrays must hold T+1 values");
  }
  const GridShape grid = shape();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& step = steps[i];
    if (step.t > steps_total) {
      throw InvalidArgument("trajectory record " + std::to_string(i) + " has t > T");
    }
    if (i > 0 && !(step.t < steps[i - 1].t)) {
      throw InvalidArgument("trajectory record " + std::to_string(i) +
                            " breaks strictly descending t (" + std::to_string(steps[i - 1].t) +
                            " then " + std::to_string(step.t) + ")");
    }
    for (const auto* tensor : {&step.input, &step.output}) {
      if (*tensor && ((*tensor)->channels() != channels || (*tensor)->shape() != grid)) {
        throw InvalidArgument("trajectory record " + std::to_string(i) +
                              " tensor does not match header dims");
      }
    }
  }
}

std::vector<std::uint8_t> encode_trajectory(const Trajectory& trajectory) {
  trajectory.validate();
  ByteWriter out;
  out.raw(kTrajectoryMagic, sizeof kTrajectoryMagic);
  out.u32(kTrajectoryVersion);
  out.u8(trajectory.rank);
  out.u32(trajectory.channels);
  out.u32(trajectory.frames);
  out.u32(trajectory.height);
  out.u32(trajectory.width);
  out.u32(trajectory.steps_total);
  out.u8(static_cast<std::uint8_t>(trajectory.schedule_kind));
  for (float v : trajectory.a) out.f32(v);
  for (float v : trajectory.b) out.f32(v);
  for (const auto& step : trajectory.steps) {
    out.u32(step.t);
    std::uint8_t flags = 0;
    if (step.input) flags |= kHasInput;
    if (step.output) flags |= kHasOutput;
    out.u8(flags);
    if (step.input) write_tensor(out, *step.input);
    if (step.output) write_tensor(out, *step.output);
  }
  return out.take();
}

void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path) {
  const auto bytes = encode_trajectory(trajectory);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw IoError("failed writing '" + path.string() + "'");
}

Trajectory decode_trajectory(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kTrajectoryMagic, 4) != 0) throw FormatError("bad magic", 0);
  const std::size_t version_at = in.offset();
  if (const auto version = in.u32("version"); version != kTrajectoryVersion) {
    throw FormatError("unsupported version " + std::to_string(version), version_at);
  }

  Trajectory traj;
  const std::size_t rank_at = in.offset();
  traj.rank = in.u8("rank");
  if (traj.rank != 2 && traj.rank != 3) {
    throw FormatError("rank must be 2 or 3, got " + std::to_string(traj.rank), rank_at);
  }
  const std::size_t dims_at = in.offset();
  traj.channels = in.u32("dims");
  traj.frames = in.u32("dims");
  traj.height = in.u32("dims");
  traj.width = in.u32("dims");
  if (traj.channels == 0 || traj.frames == 0 || traj.height == 0 || traj.width == 0) {
    throw FormatError("dims must be positive", dims_at);
  }
  if (traj.rank == 2 && traj.frames != 1) throw FormatError("2D trajectory must have F = 1", dims_at);

  const std::size_t steps_at = in.offset();
  traj.steps_total = in.u32("T");
  if (traj.steps_total == 0) throw FormatError("T must be positive", steps_at);
  const std::size_t kind_at = in.offset();
  const auto kind = in.u8("schedule kind");
  if (!known_schedule_kind(kind)) {
    throw FormatError("unknown schedule kind " + std::to_string(kind), kind_at);
  }
  traj.schedule_kind = static_cast<ScheduleKind>(kind);

  const std::uint64_t coeffs = static_cast<std::uint64_t>(traj.steps_total) + 1;
  if (coeffs * 8 > in.remaining()) {
    throw FormatError("schedule arrays of T+1=" + std::to_string(coeffs) +
                          " values exceed the file length",
                      in.offset());
  }
  traj.a.resize(coeffs);
  traj.b.resize(coeffs);
  for (auto& v : traj.a) v = in.f32("schedule a");
  for (auto& v : traj.b) v = in.f32("schedule b");

  // The product of four u32 dims can overflow 64 bits; check each step.
  const std::size_t limit = std::numeric_limits<std::size_t>::max() / 2;
  std::size_t payload = 4;
  for (std::uint32_t d : {traj.channels, traj.frames, traj.height, traj.width}) {
    if (payload > limit / d) throw FormatError("tensor dims overflow", dims_at);
    payload *= d;
  }
  const GridShape grid = traj.shape();

  while (!in.at_end()) {
    const std::size_t index = traj.steps.size();
    const std::string label = "record " + std::to_string(index);
    const std::size_t record_at = in.offset();
    TrajectoryStep step;
    step.t = in.u32(label + " header");
    const auto flags = in.u8(label + " header");
    if (flags & ~(kHasInput | kHasOutput)) {
      throw FormatError(label + " has unknown flag bits", record_at + 4);
    }
    if (step.t > traj.steps_total) throw FormatError(label + " has t > T", record_at);
    if (!traj.steps.empty() && !(step.t < traj.steps.back().t)) {
      throw FormatError(label + " breaks strictly descending t", record_at);
    }
    if (flags & kHasInput) step.input = read_tensor(in.take(payload, label + " input"), traj.channels, grid);
    if (flags & kHasOutput) step.output = read_tensor(in.take(payload, label + " output"), traj.channels, grid);
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());
  if (file.bad()) throw IoError("failed reading '" + path.string() + "'");
  return decode_trajectory(bytes);
}

NoiseSchedule trajectory_schedule(const Trajectory& trajectory) {
  const int steps = static_cast<int>(trajectory.steps_total);
  try {
    auto preset = make_schedule(trajectory.schedule_kind, steps);
    bool same = true;
    for (int t = 0; t <= steps && same; ++t) {
      same = static_cast<float>(preset.a(t)) == trajectory.a[t] &&
             static_cast<float>(preset.b(t)) == trajectory.b[t];
    }
    if (same) return preset;
  } catch (const InvalidArgument&) {
    // Not representable as a preset (e.g. T too large); fall through.
  }
  std::vector<double> a(trajectory.a.begin(), trajectory.a.end());
  std::vector<double> b(trajectory.b.begin(), trajectory.b.end());
  return NoiseSchedule::from_coefficients(trajectory.schedule_kind, std::move(a), std::move(b));
}

Trajectory trajectory_from_run(const SamplerRun& run, const Testbed& testbed) {
  if (run.inputs.empty()) throw CapabilityError("run was not recorded");
  const auto& shape = testbed.grid().shape();
  Trajectory traj;
  traj.rank = static_cast<std::uint8_t>(shape.rank());
  traj.channels = static_cast<std::uint32_t>(testbed.channels);
  traj.frames = static_cast<std::uint32_t>(shape.frames());
  traj.height = static_cast<std::uint32_t>(shape.height());
  traj.width = static_cast<std::uint32_t>(shape.width());
  traj.steps_total = static_cast<std::uint32_t>(testbed.steps());
  traj.schedule_kind = testbed.schedule.kind();
  for (double v : testbed.schedule.a_values()) traj.a.push_back(static_cast<float>(v));
  for (double v : testbed.schedule.b_values()) traj.b.push_back(static_cast<float>(v));
  for (std::size_t i = 0; i < run.inputs.size(); ++i) {
    TrajectoryStep step;
    step.t = static_cast<std::uint32_t>(testbed.steps() - static_cast<int>(i));
    step.input = run.inputs[i];
    if (i < run.outputs.size()) step.output = run.outputs[i];
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

std::vector<DistanceSeries> replay_distances(const Trajectory& trajectory, const FilterBank& bank,
                                             std::span<const MetricKind> kinds, FeatureSide side,
                                             double xi) {
  if (bank.grid().shape() != trajectory.shape()) {
    throw InvalidArgument("filter bank grid " + bank.grid().shape().to_string() +
                          " does not match trajectory grid " + trajectory.shape().to_string());
  }
  if (static_cast<std::uint32_t>(bank.steps()) < trajectory.steps_total) {
    throw InvalidArgument("filter bank has fewer timesteps than the trajectory");
  }

  std::vector<const FeatureTensor*> features;
  std::string missing;
  for (const auto& step : trajectory.steps) {
    const auto& slot = side == FeatureSide::Input ? step.input : step.output;
    if (!slot) {
      missing += (missing.empty() ? "" : ",") + std::to_string(step.t);
    } else {
      features.push_back(&*slot);
    }
  }
  if (!missing.empty()) {
    throw CapabilityError("trajectory lacks " + std::string(to_string(side)) +
                          " features at t=" + missing);
  }

  std::vector<DistanceSeries> out;
  out.reserve(kinds.size());
  for (const auto& kind : kinds) {
    const MetricEvaluator evaluate(kind, bank, xi);
    DistanceSeries series{kind, {}, {}};
    if (!features.empty()) {
      auto later = evaluate.project(*features[0], static_cast<int>(trajectory.steps[0].t));
      for (std::size_t i = 1; i < features.size(); ++i) {
        const int t = static_cast<int>(trajectory.steps[i].t);
        auto earlier = evaluate.project(*features[i], t);
        series.push(t, evaluate.distance(earlier, later));
        later = std::move(earlier);
      }
    }
    out.push_back(std::move(series));
  }
  return out;
}

}  // namespace seacache
