#pragma once

#include <cstddef>
#include <vector>

#include "rim/core.hpp"

namespace rim {

struct HoughConfig {
  double r_min = 10;
  double r_max = 60;
  double edge_threshold = 60;         // Sobel magnitude
  double accumulator_threshold = 0.4; // fraction of 2*pi*r
  double nms_center_dist = 8;
  double nms_radius_dist = 8;
  int max_results = 16;

  void validate() const;
};

/// Filled by detect_circles when requested. Accumulator bytes are counted by
/// the allocator backing the vote plane, not estimated.
struct HoughDiagnostics {
  std::size_t accumulator_peak_bytes = 0;
  std::size_t edge_pixels = 0;
  std::size_t radii = 0;
  std::size_t candidates = 0;
};

/// Gradient-directed circle Hough transform on a preprocessed 1-channel image.
///
/// Thinned edge pixels vote at +/- r along their gradient direction. Radii are
/// swept one at a time over a single reused W x H plane, so accumulator memory
/// does not grow with the radius range. A center's vote count is the 3x3 sum
/// around the peak cell; score = votes / (2 pi r) clipped to 1. Results are
/// score-descending after non-maximum suppression.
std::vector<Circle> detect_circles(const Image& gray, const HoughConfig& cfg,
                                   HoughDiagnostics* diag = nullptr);

/// Maps a circle found at 1/scale resolution to a full-resolution wheel box.
Detection circle_to_detection(const Circle& c, double scale, int frame = 0);

/// Grayscale -> downscale(factor) -> Gaussian blur(sigma).
Image preprocess_for_hough(const Image& img, int factor = 4, double sigma = 1.5);

/// Bolt search preset for a square wheel crop: radii 2-6% of the crop side.
HoughConfig bolt_preset(int crop_side);

/// Runs the bolt preset inside the inner 60% of a square grayscale wheel crop.
/// Coordinates are returned in crop space.
std::vector<Circle> detect_bolts(const Image& crop_gray, const HoughConfig& cfg);

}  // namespace rim
