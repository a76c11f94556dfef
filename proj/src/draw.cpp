#include "rim/draw.hpp"

#include <algorithm>
#include <cmath>

#include "rim/errors.hpp"

namespace rim {

Image to_rgb(const Image& img) {
  if (img.channels == 3) return img;
  Image out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
  return out;
}

namespace {

void put(Image& rgb, int x, int y, Rgb color) {
  if (!rgb.contains(x, y)) return;
  for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = color[c];
}

}  // namespace

void draw_segment(Image& rgb, Point2 from, Point2 to, Rgb color) {
  if (rgb.channels != 3) throw InvalidArgument("drawing requires an RGB image");
  const double len = std::max(std::abs(to.x - from.x), std::abs(to.y - from.y));
  const int steps = std::max(1, static_cast<int>(std::ceil(len)));
  for (int i = 0; i <= steps; ++i) {
    const double t = double(i) / steps;
    put(rgb, static_cast<int>(std::floor(from.x + t * (to.x - from.x))),
        static_cast<int>(std::floor(from.y + t * (to.y - from.y))), color);
  }
}

void draw_ellipse(Image& rgb, const Ellipse& e, Rgb color) {
  const int n = std::max(32, static_cast<int>(8 * e.a));
  Point2 prev = e.point_at(0);
  for (int i = 1; i <= n; ++i) {
    const Point2 p = e.point_at(2 * kPi * i / n);
    draw_segment(rgb, prev, p, color);
    prev = p;
  }
}

void draw_marker(Image& rgb, Point2 p, Rgb color, int half) {
  const int x = static_cast<int>(std::floor(p.x)), y = static_cast<int>(std::floor(p.y));
  for (int d = -half; d <= half; ++d) {
    put(rgb, x + d, y, color);
    put(rgb, x, y + d, color);
  }
}

}  // namespace rim
