#include "rim/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "rim/errors.hpp"

namespace rim {

bool BBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0 &&
         h > 0;
}

BBox make_bbox(double x, double y, double w, double h) {
  BBox box{x, y, w, h};
  if (!box.valid()) {
    throw InvalidArgument("invalid bbox (" + std::to_string(x) + ", " + std::to_string(y) + ", " +
                          std::to_string(w) + ", " + std::to_string(h) + ")");
  }
  return box;
}

double Ellipse::eccentricity() const {
  if (a <= 0) return 0;
  const double ratio = std::clamp(b / a, 0.0, 1.0);
  return std::sqrt(1 - ratio * ratio);
}

Point2 Ellipse::point_at(double t) const {
  const double c = std::cos(theta), s = std::sin(theta);
  const double u = a * std::cos(t), v = b * std::sin(t);
  return {cx + u * c - v * s, cy + u * s + v * c};
}

Ellipse canonical(Ellipse e) {
  if (e.b > e.a) {
    std::swap(e.a, e.b);
    e.theta += kPi / 2;
  }
  e.theta = std::fmod(e.theta, kPi);
  if (e.theta < 0) e.theta += kPi;
  if (e.theta >= kPi) e.theta = 0;
  return e;
}

Conic parametric_to_conic(const Ellipse& e) {
  const double c = std::cos(e.theta), s = std::sin(e.theta);
  const double ia = 1 / (e.a * e.a), ib = 1 / (e.b * e.b);
  Conic q;
  q.A = c * c * ia + s * s * ib;
  q.B = 2 * c * s * (ia - ib);
  q.C = s * s * ia + c * c * ib;
  q.D = -2 * q.A * e.cx - q.B * e.cy;
  q.E = -q.B * e.cx - 2 * q.C * e.cy;
  q.F = q.A * e.cx * e.cx + q.B * e.cx * e.cy + q.C * e.cy * e.cy - 1;
  return q;
}

Ellipse conic_to_parametric(const Conic& conic) {
  double A = conic.A, B = conic.B, C = conic.C;
  const double det = 4 * A * C - B * B;
  if (!(det > 0)) throw NotAnEllipse("conic is not an ellipse (B^2 - 4AC >= 0)");

  const double cx = (B * conic.E - 2 * C * conic.D) / det;
  const double cy = (B * conic.D - 2 * A * conic.E) / det;
  // Constant term after translating the origin to the center.
  double f0 = conic.F + (conic.D * cx + conic.E * cy) / 2;
  if (f0 > 0) {
    A = -A;
    B = -B;
    C = -C;
    f0 = -f0;
  }
  const double mean = (A + C) / 2;
  const double dev = std::hypot((A - C) / 2, B / 2);
  const double lo = mean - dev, hi = mean + dev;
  if (!(lo > 0) || !(f0 < 0)) throw NotAnEllipse("conic has no real points");

  Ellipse e;
  e.cx = cx;
  e.cy = cy;
  e.a = std::sqrt(-f0 / lo);
  e.b = std::sqrt(-f0 / hi);
  e.theta = 0.5 * std::atan2(-B, C - A);
  return canonical(e);
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::car: return "car";
    case Label::wheel: return "wheel";
    case Label::bolt: return "bolt";
    case Label::rim: return "rim";
  }
  return "unknown";
}

std::optional<Label> parse_label(std::string_view name) {
  for (Label l : {Label::car, Label::wheel, Label::bolt, Label::rim}) {
    if (to_string(l) == name) return l;
  }
  return std::nullopt;
}

RimClass::RimClass(int id) : id_(id) {
  if (id < 0 || id >= kCount) throw InvalidArgument("rim class id out of range: " + std::to_string(id));
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0;
}

CropTransform CropTransform::for_box(const BBox& box, int out) {
  const double side = std::max(box.w, box.h);
  return {box.cx() - side / 2, box.cy() - side / 2, side / out};
}

Ellipse CropTransform::to_source(const Ellipse& e) const {
  const Point2 c = to_source(Point2{e.cx, e.cy});
  return {c.x, c.y, e.a * scale, e.b * scale, e.theta};
}

namespace {

// Bilinear sample at a continuous point; out-of-image taps read as black.
double sample_bilinear(const Image& img, double sx, double sy, int channel) {
  const double fx = sx - 0.5, fy = sy - 0.5;
  const double x0 = std::floor(fx), y0 = std::floor(fy);
  const double tx = fx - x0, ty = fy - y0;
  const int ix = static_cast<int>(x0), iy = static_cast<int>(y0);
  auto tap = [&](int x, int y) -> double {
    return img.contains(x, y) ? img.at(x, y, channel) : 0.0;
  };
  const double top = (1 - tx) * tap(ix, iy) + (tx > 0 ? tx * tap(ix + 1, iy) : 0.0);
  if (ty == 0) return top;
  const double bot = (1 - tx) * tap(ix, iy + 1) + (tx > 0 ? tx * tap(ix + 1, iy + 1) : 0.0);
  return (1 - ty) * top + ty * bot;
}

}  // namespace

Image crop_square(const Image& img, const BBox& box, int out) {
  if (out <= 0) throw InvalidArgument("crop output side must be positive");
  if (!box.valid()) throw InvalidArgument("crop box is invalid");
  const double ix = std::min(box.right(), double(img.width)) - std::max(box.x, 0.0);
  const double iy = std::min(box.bottom(), double(img.height)) - std::max(box.y, 0.0);
  if (ix <= 0 || iy <= 0) throw DataError("invalid detection: box lies entirely outside the image");

  const CropTransform tf = CropTransform::for_box(box, out);
  const int taps = std::max(1, static_cast<int>(std::ceil(tf.scale - 1e-9)));
  Image res(out, out, img.channels);
  for (int v = 0; v < out; ++v) {
    for (int u = 0; u < out; ++u) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0;
        for (int j = 0; j < taps; ++j) {
          for (int i = 0; i < taps; ++i) {
            const double sx = tf.x0 + (u + (i + 0.5) / taps) * tf.scale;
            const double sy = tf.y0 + (v + (j + 0.5) / taps) * tf.scale;
            acc += sample_bilinear(img, sx, sy, c);
          }
        }
        acc /= taps * taps;
        res.at(u, v, c) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
      }
    }
  }
  return res;
}

}  // namespace rim
