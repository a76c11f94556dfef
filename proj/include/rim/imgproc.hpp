#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "rim/image.hpp"

namespace rim {

/// Luma = round(0.299 R + 0.587 G + 0.114 B); 1-channel input is returned as-is.
Image to_grayscale(const Image& img);

/// Box-filter average over factor x factor blocks; output is floor(dim / factor).
Image downscale(const Image& img, int factor);

/// Separable Gaussian, radius ceil(3 sigma), clamp-to-edge borders.
Image gaussian_blur(const Image& img, double sigma);

/// 3x3 Sobel on a 1-channel image with clamp-to-edge borders.
GradientField sobel_gradients(const Image& gray);

using Histogram256 = std::array<std::uint64_t, 256>;

Histogram256 histogram(const Image& gray);

struct OtsuChoice {
  int threshold = 0;
  bool degenerate = false;  // fewer than two occupied bins
};

/// Threshold t maximizing the between-class variance of {v <= t} vs {v > t}.
/// Ties resolve to the smallest t; the comparison is exact (integer arithmetic).
OtsuChoice otsu_from_histogram(const Histogram256& hist);

struct OtsuResult {
  int threshold = 0;
  bool degenerate = false;
  Image binary;  // 255 where pixel > threshold, else 0
};

OtsuResult otsu_threshold(const Image& gray);

/// Pixelwise binary image: 255 where pixel > threshold.
Image binarize(const Image& gray, int threshold);

}  // namespace rim
