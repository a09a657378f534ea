#include "seacache/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "seacache/errors.hpp"

namespace seacache {

GridShape GridShape::planar(std::size_t height, std::size_t width) {
  return GridShape({height, width});
}

GridShape GridShape::volumetric(std::size_t frames, std::size_t height, std::size_t width) {
  return GridShape({frames, height, width});
}

std::size_t GridShape::size() const noexcept {
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

std::string GridShape::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(dims_[i]);
  }
  return out;
}

FeatureTensor::FeatureTensor(std::size_t channels, GridShape shape)
    : channels_(channels), shape_(std::move(shape)), data_(channels_ * shape_.size(), 0.0) {
  if (channels_ == 0) throw InvalidArgument("feature tensor needs at least one channel");
}

FeatureTensor::FeatureTensor(std::size_t channels, GridShape shape, std::vector<double> data)
    : channels_(channels), shape_(std::move(shape)), data_(std::move(data)) {
  if (channels_ == 0) throw InvalidArgument("feature tensor needs at least one channel");
  if (data_.size() != channels_ * shape_.size()) {
    throw InvalidArgument("feature tensor data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(channels_) + "x" +
                          shape_.to_string());
  }
}

std::span<double> FeatureTensor::channel(std::size_t c) {
  if (c >= channels_) throw IndexError("channel index out of range");
  return std::span<double>(data_).subspan(c * shape_.size(), shape_.size());
}

std::span<const double> FeatureTensor::channel(std::size_t c) const {
  if (c >= channels_) throw IndexError("channel index out of range");
  return std::span<const double>(data_).subspan(c * shape_.size(), shape_.size());
}

bool FeatureTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_layout(const FeatureTensor& u, const FeatureTensor& v, const char* context) {
  if (!u.same_layout(v)) {
    throw InvalidArgument(std::string(context) + ": shape mismatch " +
                          std::to_string(u.channels()) + "x" + u.shape().to_string() + " vs " +
                          std::to_string(v.channels()) + "x" + v.shape().to_string());
  }
}

void round_to_float32(FeatureTensor& tensor) {
  for (double& v : tensor.data()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace seacache
