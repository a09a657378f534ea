#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seacache {

// Values are the on-disk `schedule_kind` byte of a SEATRAJ header.
enum class ScheduleKind : std::uint8_t {
  DpmLinear = 0,
  DpmCosine = 1,
  RectifiedFlow = 2,
};

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);  // "rf", "dpm-linear", "dpm-cosine"
bool is_dpm(ScheduleKind kind);

// Smallest signal coefficient used anywhere a division by a_t happens.
inline constexpr double kMinSignalCoeff = 1e-6;

/// Discrete mixture coefficients x_t = a[t] x_0 + b[t] eps for t = 0..T,
/// where t = 0 is the clean sample and t = T is pure noise.
///
/// Immutable; construct through the factory functions below.
class NoiseSchedule {
 public:
  ScheduleKind kind() const noexcept { return kind_; }
  int steps() const noexcept { return steps_; }
  double a(int t) const;
  double b(int t) const;
  const std::vector<double>& a_values() const noexcept { return a_; }
  const std::vector<double>& b_values() const noexcept { return b_; }

  /// a[t]^2 / b[t]^2, or nullopt when b[t] == 0 (infinite SNR).
  std::optional<double> snr(int t) const;

  /// Wraps externally supplied coefficients (e.g. read from a trajectory file).
  /// Checks shape, range and monotonicity; kind-specific identities are
  /// checked to `identity_tol`.
  static NoiseSchedule from_coefficients(ScheduleKind kind, std::vector<double> a,
                                         std::vector<double> b, double identity_tol = 1e-6);

  friend NoiseSchedule make_rf_schedule(int steps);
  friend NoiseSchedule make_dpm_schedule(ScheduleKind kind, int steps);

 private:
  NoiseSchedule(ScheduleKind kind, std::vector<double> a, std::vector<double> b);

  ScheduleKind kind_;
  int steps_;
  std::vector<double> a_;
  std::vector<double> b_;
};

/// Rectified flow: a[t] = 1 - t/T, b[t] = t/T.
NoiseSchedule make_rf_schedule(int steps);

/// Variance-preserving schedule, a = sqrt(alpha_bar), b = sqrt(1 - alpha_bar).
///
/// DpmLinear: beta linearly spaced 1e-4..2e-2 over 1000 base steps,
/// alpha_bar the cumulative product of (1 - beta), sampled at
/// round(t * 1000 / T). DpmCosine: squared-cosine alpha_bar with offset 0.008,
/// evaluated at t / T. a[0] is snapped to 1 and a[T] floored at
/// kMinSignalCoeff.
NoiseSchedule make_dpm_schedule(ScheduleKind kind, int steps);

NoiseSchedule make_schedule(ScheduleKind kind, int steps);

}  // namespace seacache
