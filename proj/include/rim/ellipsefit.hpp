#pragma once

#include <span>
#include <vector>

#include "rim/core.hpp"

namespace rim {

enum class RayLayout {
  fan,       // every ray leaves the edge midpoint, aimed at evenly spaced points on the opposite edge
  parallel,  // rays leave evenly spaced points on the edge, perpendicular to it
};

struct RaycastConfig {
  double spacing = 0.10;  // fraction of the edge length between neighboring rays
  int rays_per_edge = 9;
  RayLayout layout = RayLayout::fan;

  void validate() const;
};

struct RayHit {
  Point2 pixel;     // center of the first white pixel
  Point2 boundary;  // midpoint between the last black sample and the first white one
  Point2 direction; // unit vector of travel
};

/// Casts rays_per_edge rays from each image edge (top, right, bottom, left;
/// offsets ascending) and records the first white pixel on each. Rays that
/// leave the image without a hit contribute nothing.
std::vector<RayHit> cast_rays(const Image& binary, const RaycastConfig& cfg);

/// Pixel centers of cast_rays hits.
std::vector<Point2> raycast_contour(const Image& binary, const RaycastConfig& cfg);

/// Direct least-squares ellipse fit in the numerically stable form (quadratic
/// and linear design blocks, reduced 3x3 eigenproblem). Points are centered and
/// scaled before the fit. The returned conic satisfies 4AC - B^2 = 1.
/// Throws DegenerateInput for fewer than 5, coincident or collinear points and
/// NumericalError when no eigenvector satisfies the ellipse constraint.
Conic fit_ellipse_direct(std::span<const Point2> points);

/// Least-median start (the full direct fit against fits through seeded 5-point
/// subsets), then rounds of rejecting points whose Sampson distance is far
/// above the median and refitting. Meant for contours polluted by rays that
/// slipped through gaps in the rim. Deterministic.
struct RobustFit {
  Ellipse ellipse;
  std::vector<bool> inliers;
};
RobustFit fit_ellipse_robust(std::span<const Point2> points, int max_rounds = 4);

struct PitchCircleSpec {
  double diameter_mm = 112;
  int bolt_count = 5;

  void validate() const;
};

/// Fits the ellipse through the bolt box centers.
Ellipse pitch_ellipse(std::span<const Detection> bolts, const PitchCircleSpec& spec);
Ellipse pitch_ellipse(std::span<const Point2> bolt_centers, const PitchCircleSpec& spec);

struct SizeEstimate {
  Ellipse rim;
  Ellipse pitch;
  double diameter_mm = 0;
  double confidence = 0;
};

/// exp(-(dtheta / 0.2)^2 - (de / 0.1)^2): dtheta is the acute angle between the
/// two major axes (zero when either ellipse has eccentricity below 0.1), de the
/// eccentricity gap.
double size_confidence(const Ellipse& rim, const Ellipse& pitch);

/// diameter = pitch diameter * rim.a / pitch.a. Orthographic tilt of coplanar
/// concentric circles only shortens minor axes, so the major-axis ratio is the
/// true diameter ratio.
SizeEstimate estimate_rim_diameter(const Ellipse& rim, const Ellipse& pitch, const PitchCircleSpec& spec);

/// Moves a ray hit's boundary to where the smoothed gray profile crosses the
/// level halfway between the values 3 px before and 3 px after it. Otsu lands
/// off the middle of an edge whenever the two sides are unevenly populated, and
/// the blurred threshold crossing shifts with it; the half-level crossing does not.
Point2 refine_boundary(const Image& gray, const RayHit& hit);

/// Rim contour from a square grayscale wheel crop: blur, Otsu, rays, half-level
/// refinement, robust fit.
struct RimContour {
  Ellipse ellipse;
  int threshold = 0;
  std::vector<RayHit> hits;
  std::vector<bool> inliers;
};
RimContour extract_rim_contour(const Image& crop_gray, const RaycastConfig& cfg, double blur_sigma = 1.0);

}  // namespace rim
