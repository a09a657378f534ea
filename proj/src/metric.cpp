#include "seacache/metric.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "seacache/errors.hpp"
#include "seacache/seafilter.hpp"

namespace seacache {

void MetricKind::validate() const {
  if (tag == MetricTag::LpfCutoff) {
    if (!(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0)) {
      throw InvalidArgument("LPF cutoff fraction must lie in (0, 1]");
    }
  } else if (cutoff_fraction != 0.0) {
    throw InvalidArgument("cutoff fraction is only valid for the LPF metric");
  }
  if (tag == MetricTag::PolyFitted) {
    if (poly_coeffs.empty()) throw InvalidArgument("poly-fitted metric needs coefficients");
  } else if (!poly_coeffs.empty()) {
    throw InvalidArgument("polynomial coefficients are only valid for the poly-fitted metric");
  }
}

std::string_view tag_name(MetricTag tag) {
  switch (tag) {
    case MetricTag::Raw:
      return "RAW";
    case MetricTag::Sea:
      return "SEA";
    case MetricTag::OneMinusSea:
      return "ONE_MINUS_SEA";
    case MetricTag::SeaUnnormalized:
      return "SEA_UNNORMALIZED";
    case MetricTag::LpfCutoff:
      return "LPF_CUTOFF";
    case MetricTag::PolyFitted:
      return "POLY_FITTED";
  }
  return "UNKNOWN";
}

MetricTag parse_metric_tag(std::string_view name) {
  if (name == "raw" || name == "RAW") return MetricTag::Raw;
  if (name == "sea" || name == "SEA") return MetricTag::Sea;
  if (name == "one-minus-sea" || name == "ONE_MINUS_SEA") return MetricTag::OneMinusSea;
  if (name == "sea-unnorm" || name == "SEA_UNNORMALIZED") return MetricTag::SeaUnnormalized;
  if (name.starts_with("lpf") || name == "LPF_CUTOFF") return MetricTag::LpfCutoff;
  if (name == "poly" || name == "POLY_FITTED") return MetricTag::PolyFitted;
  throw InvalidArgument("unknown metric kind '" + std::string(name) + "'");
}

void DistanceSeries::push(int t, double value) {
  timesteps.push_back(t);
  values.push_back(value);
}

double rel_l1(const FeatureTensor& u, const FeatureTensor& v, double xi) {
  require_same_layout(u, v, "rel_l1");
  if (!(xi >= 0.0)) throw InvalidArgument("rel_l1 needs xi >= 0");
  const auto ud = u.data();
  const auto vd = v.data();
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < ud.size(); ++i) {
    diff += std::abs(ud[i] - vd[i]);
    norm += std::abs(vd[i]);
  }
  return diff / (norm + xi);
}

double sea_distance(const FeatureTensor& i_cur, const FeatureTensor& i_next,
                    const FilterBank& bank, int t, double xi) {
  return variant_distance(MetricKind::sea(), i_cur, i_next, bank, t, xi);
}

double variant_distance(const MetricKind& kind, const FeatureTensor& i_cur,
                        const FeatureTensor& i_next, const FilterBank& bank, int t, double xi) {
  if (t < 0 || t >= bank.steps()) {
    throw InvalidArgument("distance timestep " + std::to_string(t) + " outside [0, T)");
  }
  return MetricEvaluator(kind, bank, xi)(i_cur, t, i_next, t + 1);
}

double evaluate_poly(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

MetricEvaluator::MetricEvaluator(MetricKind kind, const FilterBank& bank, double xi)
    : kind_(std::move(kind)), bank_(&bank), xi_(xi) {
  kind_.validate();
  if (!(xi_ >= 0.0)) throw InvalidArgument("xi must be nonnegative");

  const auto& grid = bank.grid();
  if (kind_.tag == MetricTag::OneMinusSea) {
    owned_.reserve(bank.steps() + 1);
    for (int t = 0; t <= bank.steps(); ++t) {
      const auto sea = bank.normalized(t);
      const double peak = *std::max_element(sea.begin(), sea.end());
      std::vector<double> complement(sea.size());
      for (std::size_t p = 0; p < sea.size(); ++p) complement[p] = peak - sea[p];
      if (std::all_of(complement.begin(), complement.end(), [](double g) { return g == 0.0; })) {
        // A flat SEA filter has no complement; fall back to all-pass.
        owned_.emplace_back(sea.size(), 1.0);
      } else {
        owned_.push_back(normalize_gain(complement, grid).gains);
      }
    }
  } else if (kind_.tag == MetricTag::LpfCutoff) {
    const double limit = kind_.cutoff_fraction * grid.max_radius();
    std::vector<double> mask(grid.size());
    const auto radius = grid.radius();
    for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = radius[p] <= limit ? 1.0 : 0.0;
    owned_.push_back(std::move(mask));
  }
}

std::span<const double> MetricEvaluator::gains(int t) const {
  switch (kind_.tag) {
    case MetricTag::Raw:
    case MetricTag::PolyFitted:
      return {};
    case MetricTag::Sea:
      return bank_->normalized(t);
    case MetricTag::SeaUnnormalized:
      return bank_->raw(t);
    case MetricTag::OneMinusSea:
      if (t < 0 || t > bank_->steps()) throw IndexError("timestep out of range");
      return owned_[static_cast<std::size_t>(t)];
    case MetricTag::LpfCutoff:
      return owned_.front();
  }
  return {};
}

FeatureTensor MetricEvaluator::project(const FeatureTensor& feature, int t) const {
  if (feature.shape() != bank_->grid().shape()) {
    throw InvalidArgument("feature grid " + feature.shape().to_string() +
                          " does not match filter bank grid " +
                          bank_->grid().shape().to_string());
  }
  const auto g = gains(t);
  if (g.empty()) return feature;
  return apply_filter(g, feature);
}

double MetricEvaluator::distance(const FeatureTensor& earlier, const FeatureTensor& later) const {
  const double d = rel_l1(earlier, later, xi_);
  if (kind_.tag == MetricTag::PolyFitted) return std::max(0.0, evaluate_poly(kind_.poly_coeffs, d));
  return d;
}

double MetricEvaluator::operator()(const FeatureTensor& i_cur, int t_cur,
                                   const FeatureTensor& i_next, int t_next) const {
  require_same_layout(i_cur, i_next, "metric distance");
  return distance(project(i_cur, t_cur), project(i_next, t_next));
}

PolyFit fit_poly(std::span<const double> inputs, std::span<const double> outputs, int degree) {
  if (degree < 1) throw InvalidArgument("polynomial degree must be >= 1");
  if (inputs.size() != outputs.size()) throw InvalidArgument("fit_poly: series lengths differ");
  const auto n = static_cast<Eigen::Index>(inputs.size());
  const Eigen::Index cols = degree + 1;
  if (n < cols) {
    throw InvalidArgument("fit_poly: " + std::to_string(n) + " points cannot determine a degree " +
                          std::to_string(degree) + " polynomial");
  }

  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double power = 1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      design(i, j) = power;
      power *= inputs[static_cast<std::size_t>(i)];
    }
    target(i) = outputs[static_cast<std::size_t>(i)];
  }

  PolyFit fit;
  Eigen::VectorXd solution;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() == cols) {
    solution = qr.solve(target);
  } else {
    fit.rank_deficient = true;
    std::fprintf(stderr, "warning: fit_poly design matrix has rank %ld < %ld; using minimum-norm solution\n",
                 static_cast<long>(qr.rank()), static_cast<long>(cols));
    solution = design.completeOrthogonalDecomposition().solve(target);
  }
  fit.coeffs.assign(solution.data(), solution.data() + solution.size());
  fit.residual = (design * solution - target).squaredNorm();
  return fit;
}

PolyFit fit_poly(const DistanceSeries& inputs, const DistanceSeries& outputs, int degree) {
  return fit_poly(std::span<const double>(inputs.values), std::span<const double>(outputs.values),
                  degree);
}

}  // namespace seacache
