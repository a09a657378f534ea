#pragma once

#include <span>

#include "seacache/tensor.hpp"

namespace seacache {

struct FilteredTensor {
  FeatureTensor tensor;
  /// Largest |imag| left after the inverse transform, relative to the
  /// largest |real| of the same output (0 for an all-zero output).
  double imag_residue;
};

/// P(G, I): per channel, forward DFT over the grid axes, pointwise multiply
/// by `gains` (unshifted layout, one value per grid point), inverse DFT.
/// The imaginary part of the result is discarded.
FeatureTensor apply_filter(std::span<const double> gains, const FeatureTensor& tensor);

/// Same as apply_filter, also reporting the discarded imaginary residue.
FilteredTensor apply_filter_with_residue(std::span<const double> gains,
                                         const FeatureTensor& tensor);

}  // namespace seacache
