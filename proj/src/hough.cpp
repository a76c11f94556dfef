#include "rim/hough.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>

#include "rim/errors.hpp"
#include "rim/imgproc.hpp"

namespace rim {

void HoughConfig::validate() const {
  if (!(r_min > 0) || !(r_max > r_min)) throw InvalidArgument("hough: require 0 < r_min < r_max");
  if (!(edge_threshold > 0)) throw InvalidArgument("hough: edge_threshold must be positive");
  if (!(accumulator_threshold > 0) || accumulator_threshold > 1)
    throw InvalidArgument("hough: accumulator_threshold must lie in (0, 1]");
  if (nms_center_dist < 0 || nms_radius_dist < 0) throw InvalidArgument("hough: nms distances must be >= 0");
  if (max_results < 1) throw InvalidArgument("hough: max_results must be >= 1");
}

namespace {

struct AllocCounter {
  std::size_t current = 0;
  std::size_t peak = 0;
};

template <class T>
struct CountingAllocator {
  using value_type = T;
  AllocCounter* counter;

  explicit CountingAllocator(AllocCounter* c) : counter(c) {}
  template <class U>
  CountingAllocator(const CountingAllocator<U>& other) : counter(other.counter) {}

  T* allocate(std::size_t n) {
    counter->current += n * sizeof(T);
    counter->peak = std::max(counter->peak, counter->current);
    return std::allocator<T>{}.allocate(n);
  }
  void deallocate(T* p, std::size_t n) {
    counter->current -= n * sizeof(T);
    std::allocator<T>{}.deallocate(p, n);
  }
  template <class U>
  bool operator==(const CountingAllocator<U>& o) const { return counter == o.counter; }
};

struct EdgePoint {
  double x, y;    // pixel center
  double ux, uy;  // unit gradient
};

// Sobel edges thinned by non-maximum suppression along the quantized gradient.
std::vector<EdgePoint> thinned_edges(const Image& gray, double threshold) {
  const GradientField g = sobel_gradients(gray);
  const int W = g.width, H = g.height;
  std::vector<float> mag(g.gx.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(float(g.gx[i]), float(g.gy[i]));

  std::vector<EdgePoint> edges;
  for (int y = 1; y < H - 1; ++y) {
    for (int x = 1; x < W - 1; ++x) {
      const std::size_t i = g.index(x, y);
      const float m = mag[i];
      if (m < threshold) continue;
      const double gx = g.gx[i], gy = g.gy[i];
      // Neighbor offset along the gradient, quantized to 45 degrees.
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += kPi;
      int dx = 1, dy = 0;
      if (angle >= kPi / 8 && angle < 3 * kPi / 8) {
        dx = 1, dy = 1;
      } else if (angle >= 3 * kPi / 8 && angle < 5 * kPi / 8) {
        dx = 0, dy = 1;
      } else if (angle >= 5 * kPi / 8 && angle < 7 * kPi / 8) {
        dx = -1, dy = 1;
      }
      const float fwd = mag[g.index(x + dx, y + dy)];
      const float back = mag[g.index(x - dx, y - dy)];
      if (m < fwd || m <= back) continue;
      edges.push_back({x + 0.5, y + 0.5, gx / m, gy / m});
    }
  }
  return edges;
}

struct Candidate {
  Circle circle;
  std::uint32_t votes;
};

}  // namespace

std::vector<Circle> detect_circles(const Image& gray, const HoughConfig& cfg, HoughDiagnostics* diag) {
  cfg.validate();
  if (gray.channels != 1) throw InvalidArgument("detect_circles requires a 1-channel image");
  const int W = gray.width, H = gray.height;
  if (cfg.r_max > 0.5 * std::hypot(double(W), double(H)))
    throw InvalidArgument("hough: r_max exceeds the image half-diagonal");

  const std::vector<EdgePoint> edges = thinned_edges(gray, cfg.edge_threshold);

  constexpr std::uint16_t kVisited = 0x8000;
  constexpr std::uint16_t kCountMask = 0x7FFF;
  AllocCounter counter;
  std::vector<Candidate> candidates;
  std::size_t radii = 0;
  {
    std::vector<std::uint16_t, CountingAllocator<std::uint16_t>> plane(
        static_cast<std::size_t>(W) * H, 0, CountingAllocator<std::uint16_t>(&counter));
    std::vector<std::uint32_t> touched;
    touched.reserve(edges.size() * 2);
    auto count = [&](int x, int y) -> std::uint32_t {
      if (x < 0 || y < 0 || x >= W || y >= H) return 0;
      return plane[static_cast<std::size_t>(y) * W + x] & kCountMask;
    };

    for (double r = cfg.r_min; r <= cfg.r_max + 1e-9; r += 1.0) {
      ++radii;
      for (const EdgePoint& e : edges) {
        for (int sign : {1, -1}) {
          const double cx = e.x + sign * r * e.ux, cy = e.y + sign * r * e.uy;
          if (cx < 0 || cy < 0 || cx >= W || cy >= H) continue;
          const auto idx = static_cast<std::uint32_t>(static_cast<int>(cy) * W + static_cast<int>(cx));
          if ((plane[idx] & kCountMask) < kCountMask) ++plane[idx];
          touched.push_back(idx);
        }
      }

      const double circumference = 2 * kPi * r;
      const double min_votes = cfg.accumulator_threshold * circumference;
      const auto min_raw = static_cast<std::uint32_t>(min_votes / 9);
      for (std::uint32_t idx : touched) {
        if (plane[idx] & kVisited) continue;
        const std::uint32_t raw = plane[idx] & kCountMask;
        plane[idx] |= kVisited;
        if (raw < std::max<std::uint32_t>(min_raw, 1)) continue;
        const int x = static_cast<int>(idx % W), y = static_cast<int>(idx / W);
        std::uint32_t sum = 0;
        bool peak = true;
        double mx = 0, my = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const std::uint32_t v = count(x + dx, y + dy);
            // Strict on one side so plateaus yield exactly one peak.
            if ((dy < 0 || (dy == 0 && dx < 0)) ? v >= raw && (dx || dy) : v > raw) peak = false;
            sum += v;
            mx += dx * double(v);
            my += dy * double(v);
          }
        }
        if (!peak || sum < min_votes) continue;
        Circle c;
        c.cx = x + 0.5 + mx / sum;
        c.cy = y + 0.5 + my / sum;
        c.r = r;
        c.score = std::min(1.0, sum / circumference);
        candidates.push_back({c, sum});
      }
      for (std::uint32_t idx : touched) plane[idx] = 0;
      touched.clear();
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.circle.score != b.circle.score) return a.circle.score > b.circle.score;
    if (a.votes != b.votes) return a.votes > b.votes;
    if (a.circle.r != b.circle.r) return a.circle.r < b.circle.r;
    if (a.circle.cy != b.circle.cy) return a.circle.cy < b.circle.cy;
    return a.circle.cx < b.circle.cx;
  });

  std::vector<Circle> kept;
  for (const Candidate& cand : candidates) {
    const Circle& c = cand.circle;
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const Circle& k) {
      return std::hypot(c.cx - k.cx, c.cy - k.cy) <= cfg.nms_center_dist &&
             std::abs(c.r - k.r) <= cfg.nms_radius_dist;
    });
    if (duplicate) continue;
    kept.push_back(c);
    if (static_cast<int>(kept.size()) >= cfg.max_results) break;
  }

  if (diag) {
    diag->accumulator_peak_bytes = counter.peak;
    diag->edge_pixels = edges.size();
    diag->radii = radii;
    diag->candidates = candidates.size();
  }
  return kept;
}

Detection circle_to_detection(const Circle& c, double scale, int frame) {
  if (!(scale >= 1)) throw InvalidArgument("circle_to_detection: scale must be >= 1");
  Detection d;
  d.frame = frame;
  d.label = Label::wheel;
  d.bbox = {(c.cx - c.r) * scale, (c.cy - c.r) * scale, 2 * c.r * scale, 2 * c.r * scale};
  d.score = c.score;
  return d;
}

Image preprocess_for_hough(const Image& img, int factor, double sigma) {
  return gaussian_blur(downscale(to_grayscale(img), factor), sigma);
}

HoughConfig bolt_preset(int crop_side) {
  HoughConfig cfg;
  cfg.r_min = std::max(2.0, 0.02 * crop_side);
  cfg.r_max = std::max(cfg.r_min + 1, 0.06 * crop_side);
  cfg.edge_threshold = 60;
  cfg.accumulator_threshold = 0.5;
  cfg.nms_center_dist = cfg.r_min;
  cfg.nms_radius_dist = cfg.r_max;
  cfg.max_results = 16;
  return cfg;
}

std::vector<Circle> detect_bolts(const Image& crop_gray, const HoughConfig& cfg) {
  if (crop_gray.channels != 1) throw InvalidArgument("detect_bolts requires a 1-channel crop");
  const int x0 = static_cast<int>(std::lround(0.2 * crop_gray.width));
  const int y0 = static_cast<int>(std::lround(0.2 * crop_gray.height));
  const int w = crop_gray.width - 2 * x0, h = crop_gray.height - 2 * y0;
  Image inner(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) inner.at(x, y) = crop_gray.at(x + x0, y + y0);
  std::vector<Circle> circles = detect_circles(inner, cfg);
  for (Circle& c : circles) {
    c.cx += x0;
    c.cy += y0;
  }
  return circles;
}

}  // namespace rim
