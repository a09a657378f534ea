#include "seacache/seafilter.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "fft.hpp"
#include "seacache/errors.hpp"

namespace seacache {

FilteredTensor apply_filter_with_residue(std::span<const double> gains,
                                         const FeatureTensor& tensor) {
  const std::size_t n = tensor.channel_size();
  if (gains.size() != n) {
    throw InvalidArgument("apply_filter: " + std::to_string(gains.size()) +
                          " gains for a grid of " + std::to_string(n) + " points (" +
                          tensor.shape().to_string() + ")");
  }

  FilteredTensor out{FeatureTensor(tensor.channels(), tensor.shape()), 0.0};
  std::vector<std::complex<double>> buffer(n);
  double max_real = 0.0;
  double max_imag = 0.0;
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    const auto src = tensor.channel(c);
    for (std::size_t p = 0; p < n; ++p) buffer[p] = {src[p], 0.0};
    detail::fft_inplace(buffer, tensor.shape(), detail::FftDirection::Forward);
    for (std::size_t p = 0; p < n; ++p) buffer[p] *= gains[p];
    detail::fft_inplace(buffer, tensor.shape(), detail::FftDirection::Inverse);

    auto dst = out.tensor.channel(c);
    for (std::size_t p = 0; p < n; ++p) {
      dst[p] = buffer[p].real();
      max_real = std::max(max_real, std::abs(buffer[p].real()));
      max_imag = std::max(max_imag, std::abs(buffer[p].imag()));
    }
  }
  out.imag_residue = max_real > 0.0 ? max_imag / max_real : 0.0;
  return out;
}

FeatureTensor apply_filter(std::span<const double> gains, const FeatureTensor& tensor) {
  return std::move(apply_filter_with_residue(gains, tensor).tensor);
}

}  // namespace seacache
