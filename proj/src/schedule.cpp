#include "seacache/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seacache/errors.hpp"

namespace seacache {

namespace {

constexpr int kDpmBaseSteps = 1000;
constexpr double kLinearBetaStart = 1e-4;
constexpr double kLinearBetaEnd = 2e-2;
constexpr double kCosineOffset = 0.008;

std::vector<double> linear_alpha_bar(int steps) {
  std::vector<double> cumulative(kDpmBaseSteps + 1);
  cumulative[0] = 1.0;
  for (int s = 1; s <= kDpmBaseSteps; ++s) {
    const double beta = kLinearBetaStart + (kLinearBetaEnd - kLinearBetaStart) *
                                               static_cast<double>(s - 1) /
                                               static_cast<double>(kDpmBaseSteps - 1);
    cumulative[s] = cumulative[s - 1] * (1.0 - beta);
  }
  std::vector<double> alpha_bar(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    const auto base = static_cast<std::size_t>(
        std::lround(static_cast<double>(t) * kDpmBaseSteps / static_cast<double>(steps)));
    alpha_bar[t] = cumulative[base];
  }
  return alpha_bar;
}

std::vector<double> cosine_alpha_bar(int steps) {
  auto f = [](double u) {
    const double c = std::cos((u + kCosineOffset) / (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0.0);
  std::vector<double> alpha_bar(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    alpha_bar[t] = f(static_cast<double>(t) / static_cast<double>(steps)) / f0;
  }
  return alpha_bar;
}

}  // namespace

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::DpmLinear:
      return "dpm-linear";
    case ScheduleKind::DpmCosine:
      return "dpm-cosine";
    case ScheduleKind::RectifiedFlow:
      return "rf";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "rf") return ScheduleKind::RectifiedFlow;
  if (name == "dpm-linear") return ScheduleKind::DpmLinear;
  if (name == "dpm-cosine") return ScheduleKind::DpmCosine;
  throw InvalidArgument("unknown schedule kind '" + std::string(name) + "'");
}

bool is_dpm(ScheduleKind kind) { return kind != ScheduleKind::RectifiedFlow; }

NoiseSchedule::NoiseSchedule(ScheduleKind kind, std::vector<double> a, std::vector<double> b)
    : kind_(kind), steps_(static_cast<int>(a.size()) - 1), a_(std::move(a)), b_(std::move(b)) {}

double NoiseSchedule::a(int t) const {
  if (t < 0 || t > steps_) throw IndexError("timestep " + std::to_string(t) + " out of [0, T]");
  return a_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::b(int t) const {
  if (t < 0 || t > steps_) throw IndexError("timestep " + std::to_string(t) + " out of [0, T]");
  return b_[static_cast<std::size_t>(t)];
}

std::optional<double> NoiseSchedule::snr(int t) const {
  const double bt = b(t);
  if (bt == 0.0) return std::nullopt;
  const double at = a_[static_cast<std::size_t>(t)];
  return (at * at) / (bt * bt);
}

NoiseSchedule NoiseSchedule::from_coefficients(ScheduleKind kind, std::vector<double> a,
                                               std::vector<double> b, double identity_tol) {
  if (a.size() < 2 || a.size() != b.size()) {
    throw InvalidArgument("schedule coefficient arrays must have equal length T+1 >= 2");
  }
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (!(a[t] >= 0.0 && a[t] <= 1.0) || !(b[t] >= 0.0 && b[t] <= 1.0)) {
      throw InvalidArgument("schedule coefficient outside [0, 1] at t=" + std::to_string(t));
    }
    if (t > 0 && !(a[t] < a[t - 1] && b[t] > b[t - 1])) {
      throw InvalidArgument("schedule not strictly monotone at t=" + std::to_string(t));
    }
    const double identity = is_dpm(kind) ? a[t] * a[t] + b[t] * b[t] : a[t] + b[t];
    if (std::abs(identity - 1.0) > identity_tol) {
      throw InvalidArgument("schedule mixture identity violated at t=" + std::to_string(t));
    }
  }
  return NoiseSchedule(kind, std::move(a), std::move(b));
}

NoiseSchedule make_rf_schedule(int steps) {
  if (steps < 1) throw InvalidArgument("schedule needs T >= 1");
  std::vector<double> a(steps + 1);
  std::vector<double> b(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    b[t] = static_cast<double>(t) / static_cast<double>(steps);
    // 1 - b keeps a + b == 1 exact in floating point.
    a[t] = 1.0 - b[t];
  }
  return NoiseSchedule(ScheduleKind::RectifiedFlow, std::move(a), std::move(b));
}

NoiseSchedule make_dpm_schedule(ScheduleKind kind, int steps) {
  if (!is_dpm(kind)) throw InvalidArgument("make_dpm_schedule needs a DPM kind");
  if (steps < 1) throw InvalidArgument("schedule needs T >= 1");
  if (kind == ScheduleKind::DpmLinear && steps > kDpmBaseSteps) {
    throw InvalidArgument("dpm-linear supports at most 1000 solver steps");
  }
  std::vector<double> alpha_bar =
      kind == ScheduleKind::DpmLinear ? linear_alpha_bar(steps) : cosine_alpha_bar(steps);
  alpha_bar.front() = 1.0;
  alpha_bar.back() = std::max(alpha_bar.back(), kMinSignalCoeff * kMinSignalCoeff);

  std::vector<double> a(steps + 1);
  std::vector<double> b(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    a[t] = std::sqrt(alpha_bar[t]);
    b[t] = std::sqrt(1.0 - alpha_bar[t]);
  }
  return NoiseSchedule(kind, std::move(a), std::move(b));
}

NoiseSchedule make_schedule(ScheduleKind kind, int steps) {
  return is_dpm(kind) ? make_dpm_schedule(kind, steps) : make_rf_schedule(steps);
}

}  // namespace seacache
