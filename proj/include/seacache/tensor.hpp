#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace seacache {

/// Spatial (H x W) or spatiotemporal (F x H x W) extent of a feature grid.
class GridShape {
 public:
  static GridShape planar(std::size_t height, std::size_t width);
  static GridShape volumetric(std::size_t frames, std::size_t height, std::size_t width);

  int rank() const noexcept { return static_cast<int>(dims_.size()); }
  /// Per-axis sizes, outermost first ({H, W} or {F, H, W}).
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t frames() const noexcept { return rank() == 3 ? dims_[0] : 1; }
  std::size_t height() const noexcept { return dims_[dims_.size() - 2]; }
  std::size_t width() const noexcept { return dims_.back(); }
  std::size_t size() const noexcept;

  std::string to_string() const;
  bool operator==(const GridShape&) const = default;

 private:
  explicit GridShape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}
  std::vector<std::size_t> dims_;
};

/// Real multi-channel feature map, channel-major row-major [C, (F), H, W].
class FeatureTensor {
 public:
  FeatureTensor(std::size_t channels, GridShape shape);
  FeatureTensor(std::size_t channels, GridShape shape, std::vector<double> data);

  std::size_t channels() const noexcept { return channels_; }
  const GridShape& shape() const noexcept { return shape_; }
  std::size_t channel_size() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> channel(std::size_t c);
  std::span<const double> channel(std::size_t c) const;

  bool same_layout(const FeatureTensor& other) const noexcept {
    return channels_ == other.channels_ && shape_ == other.shape_;
  }
  bool all_finite() const noexcept;

  bool operator==(const FeatureTensor&) const = default;

 private:
  std::size_t channels_;
  GridShape shape_;
  std::vector<double> data_;
};

void require_same_layout(const FeatureTensor& u, const FeatureTensor& v, const char* context);

/// Rounds every entry to the nearest binary32 value.
void round_to_float32(FeatureTensor& tensor);

}  // namespace seacache
