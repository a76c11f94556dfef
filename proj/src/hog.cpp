#include "rim/hog.hpp"

#include <cmath>
#include <string>

#include "rim/core.hpp"
#include "rim/errors.hpp"
#include "rim/imgproc.hpp"

namespace rim {

void HogConfig::validate() const {
  if (orientations < 2) throw InvalidArgument("hog: orientations must be >= 2");
  if (cell < 2) throw InvalidArgument("hog: cell must be >= 2 px");
  if (block < 1) throw InvalidArgument("hog: block must be >= 1 cell");
  if (block_stride < 1) throw InvalidArgument("hog: block_stride must be >= 1 cell");
}

std::size_t hog_dims(const HogConfig& cfg, int side) {
  cfg.validate();
  if (side < cfg.cell * cfg.block)
    throw InvalidArgument("hog: side " + std::to_string(side) + " too small for one block");
  const std::size_t n_cells = static_cast<std::size_t>(side / cfg.cell);
  const std::size_t n_blocks = (n_cells - cfg.block) / cfg.block_stride + 1;
  return n_blocks * n_blocks * cfg.block * cfg.block * cfg.orientations;
}

std::vector<double> hog_features(const Image& gray, const HogConfig& cfg) {
  if (gray.channels != 1) throw InvalidArgument("hog_features requires a 1-channel image");
  if (gray.width != gray.height) throw InvalidArgument("hog_features requires a square image");
  const std::size_t dims = hog_dims(cfg, gray.width);

  const GradientField g = sobel_gradients(gray);
  const int n_cells = gray.width / cfg.cell;
  const int bins = cfg.orientations;
  const double range = cfg.signed_gradients ? 2 * kPi : kPi;
  const double bin_width = range / bins;

  std::vector<double> cells(static_cast<std::size_t>(n_cells) * n_cells * bins, 0.0);
  for (int y = 0; y < n_cells * cfg.cell; ++y) {
    for (int x = 0; x < n_cells * cfg.cell; ++x) {
      const auto i = g.index(x, y);
      const double gx = g.gx[i], gy = g.gy[i];
      if (gx == 0 && gy == 0) continue;
      const double mag = std::hypot(gx, gy);
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += 2 * kPi;
      if (!cfg.signed_gradients && angle >= kPi) angle -= kPi;
      // Bin centers sit at (k + 0.5) * bin_width; votes wrap circularly.
      const double pos = angle / bin_width - 0.5;
      const double lower = std::floor(pos);
      const double frac = pos - lower;
      const int b0 = (static_cast<int>(lower) % bins + bins) % bins;
      const int b1 = (b0 + 1) % bins;
      double* hist = &cells[(static_cast<std::size_t>(y / cfg.cell) * n_cells + x / cfg.cell) * bins];
      hist[b0] += mag * (1 - frac);
      hist[b1] += mag * frac;
    }
  }

  const int n_blocks = (n_cells - cfg.block) / cfg.block_stride + 1;
  constexpr double kEps = 1e-6;
  std::vector<double> out;
  out.reserve(dims);
  for (int by = 0; by < n_blocks; ++by) {
    for (int bx = 0; bx < n_blocks; ++bx) {
      const std::size_t start = out.size();
      for (int j = 0; j < cfg.block; ++j) {
        for (int i = 0; i < cfg.block; ++i) {
          const int cy = by * cfg.block_stride + j, cx = bx * cfg.block_stride + i;
          const double* hist = &cells[(static_cast<std::size_t>(cy) * n_cells + cx) * bins];
          out.insert(out.end(), hist, hist + bins);
        }
      }
      double norm2 = 0;
      for (std::size_t k = start; k < out.size(); ++k) norm2 += out[k] * out[k];
      const double scale = 1 / std::sqrt(norm2 + kEps * kEps);
      for (std::size_t k = start; k < out.size(); ++k) out[k] *= scale;
    }
  }
  return out;
}

}  // namespace rim
