#include "rim/ellipsefit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "rim/errors.hpp"
#include "rim/imgproc.hpp"

namespace rim {

void RaycastConfig::validate() const {
  if (!(spacing > 0) || spacing > 0.5) throw InvalidArgument("raycast: spacing must lie in (0, 0.5]");
  if (rays_per_edge < 1) throw InvalidArgument("raycast: rays_per_edge must be >= 1");
}

void PitchCircleSpec::validate() const {
  if (!(diameter_mm > 0)) throw InvalidArgument("pitch circle diameter must be positive");
  if (bolt_count < 5) throw InvalidArgument("pitch circle needs at least 5 bolts");
}

namespace {

struct Ray {
  Point2 origin;
  Point2 target;
};

std::vector<Ray> layout_rays(int W, int H, const RaycastConfig& cfg) {
  std::vector<Ray> rays;
  const double mx = W / 2.0, my = H / 2.0;
  const double top = 0.5, bottom = H - 0.5, left = 0.5, right = W - 0.5;
  std::vector<double> ks;
  for (int i = 0; i < cfg.rays_per_edge; ++i) ks.push_back(i - (cfg.rays_per_edge - 1) / 2.0);

  const bool fan = cfg.layout == RayLayout::fan;
  for (double k : ks) {  // top edge, heading down
    const double off = k * cfg.spacing * W;
    rays.push_back(fan ? Ray{{mx, top}, {mx + off, bottom}} : Ray{{mx + off, top}, {mx + off, bottom}});
  }
  for (double k : ks) {  // right edge, heading left
    const double off = k * cfg.spacing * H;
    rays.push_back(fan ? Ray{{right, my}, {left, my + off}} : Ray{{right, my + off}, {left, my + off}});
  }
  for (double k : ks) {  // bottom edge, heading up
    const double off = k * cfg.spacing * W;
    rays.push_back(fan ? Ray{{mx, bottom}, {mx + off, top}} : Ray{{mx + off, bottom}, {mx + off, top}});
  }
  for (double k : ks) {  // left edge, heading right
    const double off = k * cfg.spacing * H;
    rays.push_back(fan ? Ray{{left, my}, {right, my + off}} : Ray{{left, my + off}, {right, my + off}});
  }
  return rays;
}

}  // namespace

std::vector<RayHit> cast_rays(const Image& binary, const RaycastConfig& cfg) {
  cfg.validate();
  if (binary.channels != 1) throw InvalidArgument("raycast requires a 1-channel binary image");
  std::vector<RayHit> hits;
  for (const Ray& ray : layout_rays(binary.width, binary.height, cfg)) {
    const double dx = ray.target.x - ray.origin.x, dy = ray.target.y - ray.origin.y;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
    const double sx = dx / steps, sy = dy / steps;
    for (int i = 0; i <= steps; ++i) {
      const double px = ray.origin.x + i * sx, py = ray.origin.y + i * sy;
      const int ix = static_cast<int>(std::floor(px)), iy = static_cast<int>(std::floor(py));
      if (!binary.contains(ix, iy)) {
        if (i == 0) continue;
        break;
      }
      if (binary.at(ix, iy) == 0) continue;
      const double len = std::hypot(sx, sy);
      hits.push_back({{ix + 0.5, iy + 0.5}, {px - sx / 2, py - sy / 2}, {sx / len, sy / len}});
      break;
    }
  }
  return hits;
}

std::vector<Point2> raycast_contour(const Image& binary, const RaycastConfig& cfg) {
  std::vector<Point2> pts;
  for (const RayHit& h : cast_rays(binary, cfg)) pts.push_back(h.pixel);
  return pts;
}

Conic fit_ellipse_direct(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 5) throw DegenerateInput("ellipse fit needs at least 5 points, got " + std::to_string(n));

  double mx = 0, my = 0;
  for (const Point2& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const Point2& p : points) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
    syy += (p.y - my) * (p.y - my);
  }
  const double spread = std::sqrt((sxx + syy) / n);
  if (!(spread > 0) || !std::isfinite(spread)) throw DegenerateInput("ellipse fit: coincident points");
  // Smallest eigenvalue of the 2x2 scatter vanishes for collinear points.
  const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
  const double lmin = tr / 2 - std::sqrt(std::max(0.0, tr * tr / 4 - det));
  if (lmin <= 1e-12 * tr) throw DegenerateInput("ellipse fit: collinear points");

  const double s = spread / std::sqrt(2.0);
  Eigen::MatrixXd D1(n, 3), D2(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (points[i].x - mx) / s, y = (points[i].y - my) / s;
    D1.row(i) << x * x, x * y, y * y;
    D2.row(i) << x, y, 1;
  }
  const Eigen::Matrix3d S1 = D1.transpose() * D1;
  const Eigen::Matrix3d S2 = D1.transpose() * D2;
  const Eigen::Matrix3d S3 = D2.transpose() * D2;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(S3);
  if (!lu.isInvertible()) throw DegenerateInput("ellipse fit: singular linear scatter block");
  const Eigen::Matrix3d T = -lu.solve(S2.transpose());
  const Eigen::Matrix3d M = S1 + S2 * T;
  // Premultiply by the inverse of the constraint block [[0,0,2],[0,-1,0],[2,0,0]].
  Eigen::Matrix3d R;
  R.row(0) = M.row(2) / 2;
  R.row(1) = -M.row(1);
  R.row(2) = M.row(0) / 2;

  Eigen::EigenSolver<Eigen::Matrix3d> es(R);
  if (es.info() != Eigen::Success) throw NumericalError("ellipse fit: eigen solver failed");
  int chosen = -1;
  double chosen_abs = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3cd vc = es.eigenvectors().col(k);
    if (vc.imag().norm() > 1e-9 * vc.norm()) continue;
    const Eigen::Vector3d v = vc.real();
    const double cond = 4 * v(0) * v(2) - v(1) * v(1);
    const double lam = std::abs(es.eigenvalues()(k));
    if (cond > 0 && lam < chosen_abs) {
      chosen = k;
      chosen_abs = lam;
    }
  }
  if (chosen < 0) throw NumericalError("ellipse fit: no eigenvector satisfies the ellipse constraint");
  const Eigen::Vector3d a1 = es.eigenvectors().col(chosen).real();
  const Eigen::Vector3d a2 = T * a1;

  // Undo the normalization x_n = (x - mx) / s, multiplying through by s^2.
  const double A = a1(0), B = a1(1), C = a1(2), Dn = a2(0), En = a2(1), Fn = a2(2);
  Conic q;
  q.A = A;
  q.B = B;
  q.C = C;
  q.D = -2 * A * mx - B * my + Dn * s;
  q.E = -2 * C * my - B * mx + En * s;
  q.F = A * mx * mx + B * mx * my + C * my * my - Dn * s * mx - En * s * my + Fn * s * s;
  double norm = std::sqrt(4 * q.A * q.C - q.B * q.B);
  if (!(norm > 0) || !std::isfinite(norm)) throw NumericalError("ellipse fit: degenerate solution");
  if (q.A + q.C < 0) norm = -norm;
  q.A /= norm;
  q.B /= norm;
  q.C /= norm;
  q.D /= norm;
  q.E /= norm;
  q.F /= norm;
  return q;
}

namespace {

// First-order geometric distance |Q(p)| / |grad Q(p)|.
double sampson_distance(const Conic& q, const Point2& p) {
  const double gx = 2 * q.A * p.x + q.B * p.y + q.D;
  const double gy = q.B * p.x + 2 * q.C * p.y + q.E;
  const double g = std::hypot(gx, gy);
  return g > 0 ? std::abs(q(p.x, p.y)) / g : std::numeric_limits<double>::infinity();
}

}  // namespace

namespace {

double median_distance(const Conic& q, std::span<const Point2> points, std::vector<double>* dist) {
  dist->resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) (*dist)[i] = sampson_distance(q, points[i]);
  std::vector<double> sorted = *dist;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  return sorted[sorted.size() / 2];
}

// Least median of squares start: the full fit competes with fits through
// 5-point subsets drawn from a fixed seed.
Conic lmeds_start(std::span<const Point2> points) {
  Conic best = fit_ellipse_direct(points);
  std::vector<double> dist;
  double best_med = median_distance(best, points, &dist);
  if (points.size() <= 6) return best;
  std::mt19937_64 rng(0x5eed);
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<Point2> five(5);
  for (int trial = 0; trial < 200; ++trial) {
    for (std::size_t k = 0; k < 5; ++k) {
      std::swap(idx[k], idx[k + rng() % (idx.size() - k)]);
      five[k] = points[idx[k]];
    }
    try {
      const Conic q = fit_ellipse_direct(five);
      const double med = median_distance(q, points, &dist);
      if (med < best_med) {
        best_med = med;
        best = q;
      }
    } catch (const Error&) {
    }
  }
  return best;
}

}  // namespace

RobustFit fit_ellipse_robust(std::span<const Point2> points, int max_rounds) {
  RobustFit result;
  result.inliers.assign(points.size(), true);
  std::vector<Point2> subset;
  Conic q = lmeds_start(points);
  bool first = true;
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<double> dist;
    const double median = median_distance(q, points, &dist);
    const double cutoff = std::max(1.5, 3 * 1.4826 * median);
    std::vector<bool> keep(points.size());
    subset.clear();
    for (std::size_t i = 0; i < points.size(); ++i) {
      keep[i] = dist[i] <= cutoff;
      if (keep[i]) subset.push_back(points[i]);
    }
    if (subset.size() < 5) break;
    if (keep == result.inliers && !first) break;
    first = false;
    result.inliers = keep;
    q = fit_ellipse_direct(subset);
  }
  result.ellipse = conic_to_parametric(q);
  return result;
}

Ellipse pitch_ellipse(std::span<const Point2> centers, const PitchCircleSpec& spec) {
  spec.validate();
  if (static_cast<int>(centers.size()) < spec.bolt_count)
    throw InsufficientBolts("pitch ellipse needs " + std::to_string(spec.bolt_count) + " bolts, got " +
                            std::to_string(centers.size()));
  return conic_to_parametric(fit_ellipse_direct(centers));
}

Ellipse pitch_ellipse(std::span<const Detection> bolts, const PitchCircleSpec& spec) {
  std::vector<Point2> centers;
  for (const Detection& d : bolts) {
    if (d.label != Label::bolt) throw InvalidArgument("pitch_ellipse expects bolt detections");
    centers.push_back({d.bbox.cx(), d.bbox.cy()});
  }
  return pitch_ellipse(centers, spec);
}

double size_confidence(const Ellipse& rim, const Ellipse& pitch) {
  const double e_rim = rim.eccentricity(), e_pitch = pitch.eccentricity();
  double dtheta = 0;
  if (e_rim >= 0.1 && e_pitch >= 0.1) {
    dtheta = std::fmod(std::abs(rim.theta - pitch.theta), kPi);
    dtheta = std::min(dtheta, kPi - dtheta);
  }
  const double de = e_rim - e_pitch;
  return std::exp(-(dtheta / 0.2) * (dtheta / 0.2) - (de / 0.1) * (de / 0.1));
}

SizeEstimate estimate_rim_diameter(const Ellipse& rim, const Ellipse& pitch, const PitchCircleSpec& spec) {
  spec.validate();
  if (!(pitch.a > 1e-9)) throw DataError("pitch ellipse has vanishing major axis");
  if (rim.a < pitch.a) throw DataError("rim ellipse does not enclose the pitch ellipse");
  SizeEstimate est;
  est.rim = rim;
  est.pitch = pitch;
  est.diameter_mm = spec.diameter_mm * rim.a / pitch.a;
  est.confidence = size_confidence(rim, pitch);
  return est;
}

Point2 refine_boundary(const Image& gray, const RayHit& hit) {
  auto sample = [&](double t) {
    const double x = hit.boundary.x + t * hit.direction.x - 0.5;
    const double y = hit.boundary.y + t * hit.direction.y - 0.5;
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    auto px = [&](int xi, int yi) {
      return static_cast<double>(gray.at(std::clamp(xi, 0, gray.width - 1), std::clamp(yi, 0, gray.height - 1)));
    };
    return (1 - fy) * ((1 - fx) * px(x0, y0) + fx * px(x0 + 1, y0)) +
           fy * ((1 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1));
  };
  constexpr double kReach = 3, kStep = 0.25;
  const double dark = sample(-kReach), bright = sample(kReach);
  if (!(bright > dark)) return hit.boundary;
  const double level = (dark + bright) / 2;
  double prev = dark;
  for (double t = -kReach + kStep; t <= kReach + 1e-9; t += kStep) {
    const double v = sample(t);
    if (prev < level && v >= level) {
      const double u = t - kStep + kStep * (level - prev) / (v - prev);
      return {hit.boundary.x + u * hit.direction.x, hit.boundary.y + u * hit.direction.y};
    }
    prev = v;
  }
  return hit.boundary;
}

RimContour extract_rim_contour(const Image& crop_gray, const RaycastConfig& cfg, double blur_sigma) {
  if (crop_gray.channels != 1) throw InvalidArgument("rim contour requires a 1-channel crop");
  const Image smooth = blur_sigma > 0 ? gaussian_blur(crop_gray, blur_sigma) : crop_gray;
  const OtsuResult otsu = otsu_threshold(smooth);
  if (otsu.degenerate) throw DataError("rim contour: crop has a single intensity");
  RimContour out;
  out.threshold = otsu.threshold;
  out.hits = cast_rays(otsu.binary, cfg);
  std::vector<Point2> boundary;
  for (const RayHit& h : out.hits) boundary.push_back(refine_boundary(smooth, h));
  const RobustFit fit = fit_ellipse_robust(boundary);
  out.ellipse = fit.ellipse;
  out.inliers = fit.inliers;
  return out;
}

}  // namespace rim
