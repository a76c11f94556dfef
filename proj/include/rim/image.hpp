#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rim {

/// Row-major interleaved 8-bit image with 1 or 3 channels.
///
/// Continuous coordinates follow the pixel-area convention: pixel (i, j)
/// covers [i, i+1) x [j, j+1), so its center sits at (i + 0.5, j + 0.5).
/// Every geometric quantity in the library (boxes, circles, ellipses, ray
/// samples) is expressed in this frame.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c = 1, std::uint8_t fill = 0);

  bool empty() const { return data.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  std::span<const std::uint8_t> row(int y) const {
    return {data.data() + static_cast<std::size_t>(y) * width * channels,
            static_cast<std::size_t>(width) * channels};
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Signed Sobel responses; orientation is unsigned, folded into [0, pi).
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> gx;
  std::vector<std::int16_t> gy;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  double magnitude(int x, int y) const;
  double orientation(int x, int y) const;
};

}  // namespace rim
