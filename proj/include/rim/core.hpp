#pragma once

#include <optional>
#include <string_view>

#include "rim/image.hpp"

namespace rim {

inline constexpr double kPi = 3.14159265358979323846;

/// Axis-aligned box, top-left origin, pixel units. Normalized coordinates
/// only exist at the annotation-file boundary.
struct BBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double cx() const { return x + w / 2; }
  double cy() const { return y + h / 2; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  bool valid() const;
  bool contains(double px, double py) const {
    return px >= x && px <= right() && py >= y && py <= bottom();
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Throws InvalidArgument unless w > 0, h > 0 and all fields are finite.
BBox make_bbox(double x, double y, double w, double h);

struct Point2 {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Circle {
  double cx = 0;
  double cy = 0;
  double r = 0;
  double score = 0;
};

/// Parametric ellipse in canonical form: a >= b > 0, theta in [0, pi) measured
/// from the +x axis to the major axis.
struct Ellipse {
  double cx = 0;
  double cy = 0;
  double a = 0;
  double b = 0;
  double theta = 0;

  double eccentricity() const;
  Point2 point_at(double t) const;
};

/// Swaps axes (rotating theta by pi/2) when b > a and wraps theta into [0, pi).
Ellipse canonical(Ellipse e);

/// A x^2 + B xy + C y^2 + D x + E y + F = 0
struct Conic {
  double A = 0, B = 0, C = 0, D = 0, E = 0, F = 0;

  double discriminant() const { return B * B - 4 * A * C; }
  double operator()(double x, double y) const {
    return A * x * x + B * x * y + C * y * y + D * x + E * y + F;
  }
};

Conic parametric_to_conic(const Ellipse& e);

/// Throws NotAnEllipse when B^2 - 4AC >= 0 or the conic has no real points.
Ellipse conic_to_parametric(const Conic& c);

enum class Label { car, wheel, bolt, rim };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view name);

struct Detection {
  int frame = 0;
  Label label = Label::wheel;
  BBox bbox;
  double score = 0;
};

/// Rim category: 0 is the occluded / unclassifiable class, 1..21 are designs.
class RimClass {
 public:
  static constexpr int kCount = 22;
  static constexpr int kOccluded = 0;

  constexpr RimClass() = default;
  explicit RimClass(int id);

  constexpr int id() const { return id_; }
  constexpr bool occluded() const { return id_ == kOccluded; }

  friend constexpr auto operator<=>(RimClass, RimClass) = default;

 private:
  int id_ = kOccluded;
};

/// Intersection over union; symmetric, 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

/// Square region of side max(w, h) centered on the box, resampled to out x out.
/// Pixels falling outside the source are black. Throws DataError when the box
/// does not intersect the image.
Image crop_square(const Image& img, const BBox& box, int out);

/// Maps between the crop produced by crop_square and the source frame.
struct CropTransform {
  double x0 = 0;
  double y0 = 0;
  double scale = 1;  // source pixels per crop pixel

  static CropTransform for_box(const BBox& box, int out);
  Point2 to_source(Point2 p) const { return {x0 + p.x * scale, y0 + p.y * scale}; }
  Point2 to_crop(Point2 p) const { return {(p.x - x0) / scale, (p.y - y0) / scale}; }
  Ellipse to_source(const Ellipse& e) const;
};

}  // namespace rim
