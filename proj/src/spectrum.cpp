#include "seacache/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seacache/errors.hpp"

namespace seacache {

namespace {

// Signed frequency index of DFT bin j on an axis of length n, in (-n/2, n/2].
double signed_frequency(std::size_t j, std::size_t n) {
  const auto k = static_cast<long long>(j);
  const auto len = static_cast<long long>(n);
  return static_cast<double>(2 * k <= len ? k : k - len) / static_cast<double>(n);
}

}  // namespace

RadialGrid::RadialGrid(GridShape shape) : shape_(std::move(shape)) {
  const auto& dims = shape_.dims();
  for (std::size_t n : dims) {
    if (n < 2) throw InvalidArgument("radial grid axis size must be >= 2, got " + shape_.to_string());
  }

  const std::size_t total = shape_.size();
  radius_.assign(total, 0.0);
  // Row-major walk with the last axis fastest.
  std::vector<std::size_t> idx(dims.size(), 0);
  for (std::size_t p = 0; p < total; ++p) {
    double sum = 0.0;
    for (std::size_t axis = 0; axis < dims.size(); ++axis) {
      const double f = signed_frequency(idx[axis], dims[axis]);
      sum += f * f;
    }
    radius_[p] = std::sqrt(sum);
    for (std::size_t axis = dims.size(); axis-- > 0;) {
      if (++idx[axis] < dims[axis]) break;
      idx[axis] = 0;
    }
  }
  max_radius_ = *std::max_element(radius_.begin(), radius_.end());

  const std::size_t bins = *std::max_element(dims.begin(), dims.end()) / 2 + 1;
  bin_index_.resize(total);
  bin_count_.assign(bins, 0);
  for (std::size_t p = 0; p < total; ++p) {
    const double scaled = radius_[p] / max_radius_ * static_cast<double>(bins - 1);
    const auto bin = std::min(static_cast<std::size_t>(std::floor(scaled + 0.5)), bins - 1);
    bin_index_[p] = bin;
    ++bin_count_[bin];
  }
  for (std::size_t bin = 0; bin < bins; ++bin) {
    if (bin_count_[bin] == 0) {
      throw InvalidArgument("grid " + shape_.to_string() + " leaves radial bin " +
                            std::to_string(bin) + " empty");
    }
  }
}

double RadialGrid::bin_radius(std::size_t bin) const {
  if (bin >= bins()) throw IndexError("radial bin out of range");
  return static_cast<double>(bin) * max_radius_ / static_cast<double>(bins() - 1);
}

std::vector<double> RadialGrid::bin_average(std::span<const double> values) const {
  if (values.size() != size()) throw InvalidArgument("bin_average: length does not match grid");
  std::vector<double> sums(bins(), 0.0);
  for (std::size_t p = 0; p < values.size(); ++p) sums[bin_index_[p]] += values[p];
  for (std::size_t bin = 0; bin < sums.size(); ++bin) {
    sums[bin] /= static_cast<double>(bin_count_[bin]);
  }
  return sums;
}

PowerLawPrior PowerLawPrior::default_for_rank(int rank) {
  return PowerLawPrior{1.0, rank == 3 ? 3.0 : 2.0};
}

void PowerLawPrior::validate() const {
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw InvalidArgument("power-law amplitude must be positive");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw InvalidArgument("power-law exponent must be nonnegative");
  }
}

std::vector<double> prior_spectrum(const RadialGrid& grid, const PowerLawPrior& prior) {
  prior.validate();
  std::vector<double> spectrum(grid.size());
  const auto radius = grid.radius();
  for (std::size_t p = 0; p < spectrum.size(); ++p) {
    if (prior.beta == 0.0) {
      // A flat spectrum has no pole at the origin.
      spectrum[p] = prior.amplitude;
    } else {
      spectrum[p] = radius[p] > 0.0 ? prior.amplitude * std::pow(radius[p], -prior.beta)
                                    : kInfinitePower;
    }
  }
  return spectrum;
}

std::vector<double> wiener_response(std::span<const double> spectrum, double a, double b) {
  if (!(a > 0.0)) throw InvalidArgument("wiener_response needs a > 0");
  if (!(b >= 0.0)) throw InvalidArgument("wiener_response needs b >= 0");
  std::vector<double> gains(spectrum.size());
  const double limit = 1.0 / a;
  const double a2 = a * a;
  const double b2 = b * b;
  for (std::size_t p = 0; p < spectrum.size(); ++p) {
    const double s = spectrum[p];
    if (b == 0.0 || std::isinf(s)) {
      gains[p] = limit;
    } else {
      gains[p] = a * s / (a2 * s + b2);
    }
  }
  return gains;
}

NormalizedGain normalize_gain(std::span<const double> gains, const RadialGrid& grid) {
  for (double g : gains) {
    if (!std::isfinite(g) || g < 0.0) throw InvalidArgument("gains must be finite and nonnegative");
  }
  const auto profile = grid.bin_average(gains);
  const double mean = std::accumulate(profile.begin(), profile.end(), 0.0) /
                      static_cast<double>(profile.size());
  if (!(mean > 0.0)) throw DegenerateFilter("cannot normalize an all-zero filter");

  NormalizedGain out{1.0 / mean, std::vector<double>(gains.size())};
  for (std::size_t p = 0; p < gains.size(); ++p) out.gains[p] = out.nu * gains[p];
  return out;
}

double effective_signal_coeff(const NoiseSchedule& schedule, int t) {
  return std::max(schedule.a(t), kMinSignalCoeff);
}

FilterBank::FilterBank(NoiseSchedule schedule, RadialGrid grid, PowerLawPrior prior)
    : schedule_(std::move(schedule)), grid_(std::move(grid)), prior_(prior) {
  const auto spectrum = prior_spectrum(grid_, prior_);
  const int steps = schedule_.steps();
  raw_.reserve(steps + 1);
  normalized_.reserve(steps + 1);
  nu_.reserve(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    auto raw = wiener_response(spectrum, effective_signal_coeff(schedule_, t), schedule_.b(t));
    auto norm = normalize_gain(raw, grid_);
    raw_.push_back(std::move(raw));
    normalized_.push_back(std::move(norm.gains));
    nu_.push_back(norm.nu);
  }
}

std::size_t FilterBank::index(int t) const {
  if (t < 0 || t > steps()) throw IndexError("filter bank timestep " + std::to_string(t) + " out of range");
  return static_cast<std::size_t>(t);
}

std::span<const double> FilterBank::raw(int t) const { return raw_[index(t)]; }
std::span<const double> FilterBank::normalized(int t) const { return normalized_[index(t)]; }
double FilterBank::nu(int t) const { return nu_[index(t)]; }

FilterBank build_filter_bank(const NoiseSchedule& schedule, const RadialGrid& grid,
                             const PowerLawPrior& prior) {
  return FilterBank(schedule, grid, prior);
}

}  // namespace seacache
