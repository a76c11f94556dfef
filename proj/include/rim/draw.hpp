#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "rim/core.hpp"

namespace rim {

using Rgb = std::array<std::uint8_t, 3>;

Image to_rgb(const Image& img);

void draw_ellipse(Image& rgb, const Ellipse& e, Rgb color);
void draw_marker(Image& rgb, Point2 p, Rgb color, int half = 2);
void draw_segment(Image& rgb, Point2 from, Point2 to, Rgb color);

}  // namespace rim
