#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seacache/metric.hpp"
#include "seacache/schedule.hpp"
#include "seacache/spectrum.hpp"
#include "seacache/synthetic.hpp"
#include "seacache/tensor.hpp"

namespace seacache {

// SEATRAJ v1, all integers and floats little-endian:
//
//   "SEAT" | u32 version=1 | u8 rank | u32 C | u32 F | u32 H | u32 W | u32 T |
//   u8 schedule_kind | f32 a[T+1] | f32 b[T+1] |
//   records until EOF: u32 t | u8 flags | [f32 input[C*F*H*W]] | [f32 output[...]]
//
// flags bit0 = input present, bit1 = output present. Records are stored in
// strictly descending t. Tensors are channel-major row-major [C,(F),H,W].
inline constexpr char kTrajectoryMagic[4] = {'S', 'E', 'A', 'T'};
inline constexpr std::uint32_t kTrajectoryVersion = 1;
inline constexpr std::uint8_t kHasInput = 0x1;
inline constexpr std::uint8_t kHasOutput = 0x2;

struct TrajectoryStep {
  std::uint32_t t = 0;
  std::optional<FeatureTensor> input;
  std::optional<FeatureTensor> output;
};

struct Trajectory {
  std::uint8_t rank = 2;
  std::uint32_t channels = 1;
  std::uint32_t frames = 1;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t steps_total = 0;  // T
  ScheduleKind schedule_kind = ScheduleKind::RectifiedFlow;
  std::vector<float> a;
  std::vector<float> b;
  std::vector<TrajectoryStep> steps;

  GridShape shape() const;
  std::size_t points() const;  // C * F * H * W
  /// Throws InvalidArgument describing the first violated constraint.
  void validate() const;
};

enum class FeatureSide { Input, Output };

std::string_view to_string(FeatureSide side);

/// Reads and fully validates a SEATRAJ file. Throws FormatError (with byte
/// offset) on malformed content and IoError when the file cannot be read.
Trajectory read_trajectory(const std::filesystem::path& path);
Trajectory decode_trajectory(std::span<const std::uint8_t> bytes);

/// Throws InvalidArgument for an invalid trajectory and IoError on I/O failure.
void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_trajectory(const Trajectory& trajectory);

/// Schedule stored in a trajectory. When the coefficients are the binary32
/// image of the named preset, the exact preset is returned; otherwise the
/// stored values are validated and wrapped.
NoiseSchedule trajectory_schedule(const Trajectory& trajectory);

/// Packages a recorded synthetic run (all steps, inputs and outputs).
Trajectory trajectory_from_run(const SamplerRun& run, const Testbed& testbed);

/// Consecutive-record distance series for each requested kind, over the
/// chosen feature side. Series entries are labelled by the lower timestep of
/// each adjacent record pair. Throws CapabilityError listing the timesteps
/// that lack the requested feature.
std::vector<DistanceSeries> replay_distances(const Trajectory& trajectory, const FilterBank& bank,
                                             std::span<const MetricKind> kinds, FeatureSide side,
                                             double xi = kDefaultXi);

}  // namespace seacache
