#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "seacache/schedule.hpp"
#include "seacache/tensor.hpp"

namespace seacache {

/// Radial frequency of every point of a DFT grid in unshifted layout,
/// quantized into L = floor(max(dims)/2) + 1 radial bins.
class RadialGrid {
 public:
  /// Throws InvalidArgument if any axis is shorter than 2.
  explicit RadialGrid(GridShape shape);

  const GridShape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return shape_.rank(); }
  std::size_t size() const noexcept { return radius_.size(); }
  std::size_t bins() const noexcept { return bin_count_.size(); }
  double max_radius() const noexcept { return max_radius_; }

  /// Normalized radial frequency, in [0, sqrt(rank)/2].
  std::span<const double> radius() const noexcept { return radius_; }
  std::span<const std::size_t> bin_index() const noexcept { return bin_index_; }
  std::size_t bin_population(std::size_t bin) const { return bin_count_.at(bin); }
  /// Nominal radius of a bin, bin * r_max / (L - 1).
  double bin_radius(std::size_t bin) const;

  /// Per-bin mean of a per-point quantity.
  std::vector<double> bin_average(std::span<const double> values) const;

 private:
  GridShape shape_;
  std::vector<double> radius_;
  std::vector<std::size_t> bin_index_;
  std::vector<std::size_t> bin_count_;
  double max_radius_ = 0.0;
};

/// S(f) = amplitude * |f|^-beta.
struct PowerLawPrior {
  double amplitude = 1.0;
  double beta = 2.0;

  /// beta = 2 for images, beta = 3 for videos, amplitude 1.
  static PowerLawPrior default_for_rank(int rank);
  void validate() const;
};

/// Marker for the pole of the power law at zero frequency.
inline constexpr double kInfinitePower = std::numeric_limits<double>::infinity();

/// Per-point prior power; kInfinitePower at the origin when beta > 0 (a flat
/// prior is finite everywhere).
std::vector<double> prior_spectrum(const RadialGrid& grid, const PowerLawPrior& prior);

/// Optimal linear denoising response a*S / (a^2*S + b^2), pointwise.
/// kInfinitePower points take the limit 1/a; b == 0 gives 1/a everywhere.
std::vector<double> wiener_response(std::span<const double> spectrum, double a, double b);

struct NormalizedGain {
  double nu;
  std::vector<double> gains;
};

/// Scales G so that the mean over radial bins of the bin-averaged gain is 1.
/// Throws DegenerateFilter when G is identically zero.
NormalizedGain normalize_gain(std::span<const double> gains, const RadialGrid& grid);

/// Per-timestep Wiener responses for a schedule, raw and normalized.
class FilterBank {
 public:
  FilterBank(NoiseSchedule schedule, RadialGrid grid, PowerLawPrior prior);

  const NoiseSchedule& schedule() const noexcept { return schedule_; }
  const RadialGrid& grid() const noexcept { return grid_; }
  const PowerLawPrior& prior() const noexcept { return prior_; }
  int steps() const noexcept { return schedule_.steps(); }

  std::span<const double> raw(int t) const;
  std::span<const double> normalized(int t) const;
  double nu(int t) const;

 private:
  std::size_t index(int t) const;

  NoiseSchedule schedule_;
  RadialGrid grid_;
  PowerLawPrior prior_;
  std::vector<std::vector<double>> raw_;
  std::vector<std::vector<double>> normalized_;
  std::vector<double> nu_;
};

/// The signal coefficient actually used when building filters: a[t] floored
/// at kMinSignalCoeff so the response is defined at the pure-noise end.
double effective_signal_coeff(const NoiseSchedule& schedule, int t);

FilterBank build_filter_bank(const NoiseSchedule& schedule, const RadialGrid& grid,
                             const PowerLawPrior& prior);

}  // namespace seacache
