#include <gtest/gtest.h>

#include <cmath>

#include "rim/errors.hpp"
#include "rim/hough.hpp"
#include "rim/imgproc.hpp"
#include "rim/synth.hpp"

using namespace rim;

namespace {

// Ring of the given half-thickness, coverage estimated on a 4x4 subgrid.
void draw_ring(Image& img, double cx, double cy, double r, double half = 1.5) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      int hits = 0;
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
          const double d = std::hypot(x + (i + 0.5) / 4 - cx, y + (j + 0.5) / 4 - cy);
          hits += std::fabs(d - r) <= half;
        }
      img.at(x, y) = static_cast<std::uint8_t>(std::max<int>(img.at(x, y), hits * 255 / 16));
    }
}

HoughConfig config(double r_min, double r_max) {
  HoughConfig c;
  c.r_min = r_min;
  c.r_max = r_max;
  return c;
}

}  // namespace

TEST(Hough, SingleRing) {
  Image img(200, 200, 1, 0);
  draw_ring(img, 100, 100, 40);
  const auto found = detect_circles(gaussian_blur(img, 1.0), config(10, 90));
  ASSERT_EQ(found.size(), 1u);
  EXPECT_NEAR(found[0].cx, 100, 2);
  EXPECT_NEAR(found[0].cy, 100, 2);
  EXPECT_NEAR(found[0].r, 40, 2);
  EXPECT_GT(found[0].score, 0.8);
  EXPECT_LE(found[0].score, 1.0);
}

TEST(Hough, BlankImage) {
  EXPECT_TRUE(detect_circles(Image(120, 90, 1, 30), config(10, 40)).empty());
}

TEST(Hough, TwoRings) {
  Image img(260, 160, 1, 0);
  draw_ring(img, 60, 80, 25);
  draw_ring(img, 180, 80, 50);
  const auto found = detect_circles(gaussian_blur(img, 1.0), config(10, 70));
  ASSERT_EQ(found.size(), 2u);
  int small = found[0].r < found[1].r ? 0 : 1;
  EXPECT_NEAR(found[small].cx, 60, 2);
  EXPECT_NEAR(found[small].r, 25, 2);
  EXPECT_NEAR(found[1 - small].cx, 180, 2);
  EXPECT_NEAR(found[1 - small].r, 50, 2);
  EXPECT_GE(found[0].score, found[1].score);
}

TEST(Hough, TranslationEquivariant) {
  Image a(220, 180, 1, 0), b(220, 180, 1, 0);
  draw_ring(a, 90.3, 80.6, 33);
  draw_ring(b, 90.3 + 17, 80.6 + 9, 33);
  const auto fa = detect_circles(gaussian_blur(a, 1.0), config(10, 60));
  const auto fb = detect_circles(gaussian_blur(b, 1.0), config(10, 60));
  ASSERT_EQ(fa.size(), 1u);
  ASSERT_EQ(fb.size(), 1u);
  EXPECT_NEAR(fb[0].cx - fa[0].cx, 17, 1);
  EXPECT_NEAR(fb[0].cy - fa[0].cy, 9, 1);
}

// One W x H plane of 16-bit counters, whatever the radius range.
TEST(Hough, AccumulatorMemoryIndependentOfRadiusRange) {
  Image img(300, 200, 1, 0);
  draw_ring(img, 150, 100, 45);
  const Image pre = gaussian_blur(img, 1.0);
  HoughDiagnostics narrow, wide;
  detect_circles(pre, config(40, 50), &narrow);
  detect_circles(pre, config(5, 110), &wide);
  EXPECT_GT(wide.radii, 5 * narrow.radii);
  EXPECT_EQ(narrow.accumulator_peak_bytes, wide.accumulator_peak_bytes);
  EXPECT_LE(wide.accumulator_peak_bytes, 300u * 200u * sizeof(std::uint16_t));
  EXPECT_GT(wide.accumulator_peak_bytes, 0u);
}

TEST(Hough, ConfigValidation) {
  EXPECT_THROW(config(20, 10).validate(), InvalidArgument);
  EXPECT_THROW(config(0, 10).validate(), InvalidArgument);
  // r_max beyond the half-diagonal of a 100x100 image (70.7)
  EXPECT_THROW(detect_circles(Image(100, 100, 1, 0), config(10, 80)), InvalidArgument);
}

TEST(Hough, CircleToDetection) {
  const Detection d = circle_to_detection(Circle{50, 50, 20, 0.9}, 4);
  EXPECT_EQ(d.label, Label::wheel);
  EXPECT_EQ(d.bbox, make_bbox(120, 120, 160, 160));
  EXPECT_DOUBLE_EQ(d.score, 0.9);
  const Detection one = circle_to_detection(Circle{30, 40, 7, 0.5}, 1);
  EXPECT_EQ(one.bbox, make_bbox(23, 33, 14, 14));
  const Detection r = circle_to_detection(Circle{13.25, 7.5, 3, 1}, 3);
  EXPECT_DOUBLE_EQ(r.bbox.cx(), 13.25 * 3);
  EXPECT_DOUBLE_EQ(r.bbox.cy(), 7.5 * 3);
}

TEST(Hough, PreprocessShape) {
  const Image frame(1920, 1080, 3, 10);
  const Image p = preprocess_for_hough(frame);
  EXPECT_EQ(p.width, 480);
  EXPECT_EQ(p.height, 270);
  EXPECT_EQ(p.channels, 1);
}

TEST(Hough, BoltsOnSyntheticWheel) {
  SceneSpec s{400, 400, 0.55, 0, {}, {}, 0, 1};
  WheelSpec w;
  w.center = {200, 200};
  w.spokes = 5;
  s.wheels.push_back(w);
  auto [img, truth] = render_wheel(s);
  const WheelTruth& t = truth.wheels[0];
  const Image crop = crop_square(img, t.box, 256);
  const CropTransform tf = CropTransform::for_box(t.box, 256);
  const auto bolts = detect_bolts(crop, bolt_preset(256));
  ASSERT_GE(bolts.size(), 5u);
  for (int k = 0; k < 5; ++k) {
    const Point2 p = tf.to_source(Point2{bolts[static_cast<std::size_t>(k)].cx, bolts[static_cast<std::size_t>(k)].cy});
    double best = 1e9;
    for (const Point2& b : t.bolts) best = std::min(best, std::hypot(p.x - b.x, p.y - b.y));
    EXPECT_LT(best, 2.0);
  }
}
