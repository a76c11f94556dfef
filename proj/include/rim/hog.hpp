#pragma once

#include <cstddef>
#include <vector>

#include "rim/image.hpp"

namespace rim {

/// HOG layout. Defaults are the 13-bin / 24 px configuration with 3x3-cell
/// blocks at a one-cell stride.
struct HogConfig {
  int orientations = 13;
  int cell = 24;          // pixels per cell side
  int block = 3;          // cells per block side
  int block_stride = 1;   // cells
  bool signed_gradients = false;

  void validate() const;
  friend bool operator==(const HogConfig&, const HogConfig&) = default;
};

/// n_cells = floor(side / cell); n_blocks = (n_cells - block) / stride + 1 per
/// axis; dims = n_blocks^2 * block^2 * orientations.
std::size_t hog_dims(const HogConfig& cfg, int side);

/// Descriptor of a square 1-channel image. Cells hold magnitude-weighted
/// orientation votes split linearly between the two nearest bins; each block
/// is L2-normalized (v / sqrt(|v|^2 + eps^2), eps = 1e-6) and blocks are
/// concatenated in row-major order.
std::vector<double> hog_features(const Image& gray, const HogConfig& cfg);

}  // namespace rim
