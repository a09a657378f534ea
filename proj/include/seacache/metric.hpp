#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seacache/spectrum.hpp"
#include "seacache/tensor.hpp"

namespace seacache {

inline constexpr double kDefaultXi = 1e-8;
inline constexpr double kDefaultLpfCutoff = 0.30;
inline constexpr int kDefaultPolyDegree = 4;

enum class MetricTag {
  Raw,
  Sea,
  OneMinusSea,
  SeaUnnormalized,
  LpfCutoff,
  PolyFitted,
};

/// A change measure between consecutive features. `cutoff_fraction` is only
/// meaningful for LpfCutoff and `poly_coeffs` (low to high degree) only for
/// PolyFitted.
struct MetricKind {
  MetricTag tag = MetricTag::Sea;
  double cutoff_fraction = 0.0;
  std::vector<double> poly_coeffs;

  static MetricKind raw() { return {MetricTag::Raw, 0.0, {}}; }
  static MetricKind sea() { return {MetricTag::Sea, 0.0, {}}; }
  static MetricKind one_minus_sea() { return {MetricTag::OneMinusSea, 0.0, {}}; }
  static MetricKind sea_unnormalized() { return {MetricTag::SeaUnnormalized, 0.0, {}}; }
  static MetricKind lpf(double cutoff = kDefaultLpfCutoff) {
    return {MetricTag::LpfCutoff, cutoff, {}};
  }
  static MetricKind poly(std::vector<double> coeffs) {
    return {MetricTag::PolyFitted, 0.0, std::move(coeffs)};
  }

  /// Throws InvalidArgument when variant fields do not match the tag.
  void validate() const;
  bool operator==(const MetricKind&) const = default;
};

/// Upper-case tag name used in CSV `kind` columns, e.g. "SEA_UNNORMALIZED".
std::string_view tag_name(MetricTag tag);
/// Accepts the CSV tag names and the CLI spellings
/// raw, sea, one-minus-sea, sea-unnorm, lpf, lpf<percent>, poly.
MetricTag parse_metric_tag(std::string_view name);

/// Consecutive-step distances. values[i] belongs to the transition
/// timesteps[i] + 1 -> timesteps[i] (labelled by the lower timestep), in
/// sampling order.
struct DistanceSeries {
  MetricKind kind;
  std::vector<int> timesteps;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  void push(int t, double value);
};

/// ||u - v||_1 / (||v||_1 + xi).
double rel_l1(const FeatureTensor& u, const FeatureTensor& v, double xi = kDefaultXi);

/// rel_l1(P(G^norm_t, I_cur), P(G^norm_{t+1}, I_next)), 0 <= t < T.
double sea_distance(const FeatureTensor& i_cur, const FeatureTensor& i_next,
                    const FilterBank& bank, int t, double xi = kDefaultXi);

/// Any metric variant between I_t (`i_cur`) and I_{t+1} (`i_next`).
double variant_distance(const MetricKind& kind, const FeatureTensor& i_cur,
                        const FeatureTensor& i_next, const FilterBank& bank, int t,
                        double xi = kDefaultXi);

/// Horner evaluation, coefficients low to high degree.
double evaluate_poly(std::span<const double> coeffs, double x);

/// Precomputed per-timestep filters for one metric kind.
///
/// Distances are split into project() (filter one feature at its own
/// timestep) and distance() (compare two projections) so a sampler can
/// reuse the projection of I_{t+1} from the previous step.
class MetricEvaluator {
 public:
  MetricEvaluator(MetricKind kind, const FilterBank& bank, double xi = kDefaultXi);

  const MetricKind& kind() const noexcept { return kind_; }
  double xi() const noexcept { return xi_; }

  /// Gains applied at timestep t, or an empty span for unfiltered kinds.
  std::span<const double> gains(int t) const;
  FeatureTensor project(const FeatureTensor& feature, int t) const;
  /// Distance between projected features; `later` is the one at the higher
  /// timestep and supplies the denominator.
  double distance(const FeatureTensor& earlier, const FeatureTensor& later) const;
  /// project + distance for features at arbitrary timesteps t_cur < t_next.
  double operator()(const FeatureTensor& i_cur, int t_cur, const FeatureTensor& i_next,
                    int t_next) const;

 private:
  MetricKind kind_;
  const FilterBank* bank_;
  double xi_;
  std::vector<std::vector<double>> owned_;  // OneMinusSea per t, or the LPF mask
};

struct PolyFit {
  std::vector<double> coeffs;  // low to high degree
  bool rank_deficient = false;
  double residual = 0.0;  // sum of squared residuals
};

/// Least-squares polynomial mapping input distances to output distances.
/// Rank-deficient systems fall back to the minimum-norm solution and set
/// `rank_deficient`.
PolyFit fit_poly(std::span<const double> inputs, std::span<const double> outputs,
                 int degree = kDefaultPolyDegree);
PolyFit fit_poly(const DistanceSeries& inputs, const DistanceSeries& outputs,
                 int degree = kDefaultPolyDegree);

}  // namespace seacache
