#pragma once

#include <complex>
#include <span>

#include "seacache/tensor.hpp"

namespace seacache::detail {

enum class FftDirection { Forward, Inverse };

/// In-place complex DFT over all axes of `shape` (unshifted layout).
/// Forward is unnormalized; Inverse is scaled by 1/N.
/// Safe to call concurrently; plans are cached per (shape, direction).
void fft_inplace(std::span<std::complex<double>> buffer, const GridShape& shape,
                 FftDirection direction);

}  // namespace seacache::detail
