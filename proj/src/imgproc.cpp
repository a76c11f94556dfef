#include "rim/imgproc.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <vector>

#include "rim/errors.hpp"

namespace rim {

Image::Image(int w, int h, int c, std::uint8_t fill) : width(w), height(h), channels(c) {
  if (w <= 0 || h <= 0) throw InvalidArgument("image dimensions must be positive");
  if (c != 1 && c != 3) throw InvalidArgument("image must have 1 or 3 channels");
  data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

double GradientField::magnitude(int x, int y) const {
  const auto i = index(x, y);
  return std::hypot(double(gx[i]), double(gy[i]));
}

double GradientField::orientation(int x, int y) const {
  const auto i = index(x, y);
  double th = std::atan2(double(gy[i]), double(gx[i]));
  if (th < 0) th += 3.14159265358979323846;
  if (th >= 3.14159265358979323846) th = 0;
  return th;
}

namespace {

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void require_gray(const Image& img, const char* op) {
  if (img.channels != 1) throw InvalidArgument(std::string(op) + " requires a 1-channel image");
}

}  // namespace

Image to_grayscale(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) throw InvalidArgument("to_grayscale: unsupported channel count");
  Image out(img.width, img.height, 1);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const unsigned r = img.data[3 * i], g = img.data[3 * i + 1], b = img.data[3 * i + 2];
    out.data[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return out;
}

Image downscale(const Image& img, int factor) {
  if (factor < 1) throw InvalidArgument("downscale factor must be >= 1");
  if (factor == 1) return img;
  const int w = img.width / factor, h = img.height / factor;
  if (w == 0 || h == 0) throw InvalidArgument("downscale factor exceeds image size");
  Image out(w, h, img.channels);
  const unsigned n = static_cast<unsigned>(factor * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        unsigned sum = 0;
        for (int j = 0; j < factor; ++j)
          for (int i = 0; i < factor; ++i) sum += img.at(x * factor + i, y * factor + j, c);
        out.at(x, y, c) = static_cast<std::uint8_t>((sum + n / 2) / n);
      }
    }
  }
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (!(sigma > 0)) throw InvalidArgument("gaussian_blur: sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-(k * k) / (2 * sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& w : kernel) w /= total;

  const int W = img.width, H = img.height, C = img.channels;
  std::vector<double> tmp(img.data.size());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0;
        for (int k = -radius; k <= radius; ++k) {
          const int xs = std::clamp(x + k, 0, W - 1);
          acc += kernel[k + radius] * img.at(xs, y, c);
        }
        tmp[(static_cast<std::size_t>(y) * W + x) * C + c] = acc;
      }
    }
  }
  Image out(W, H, C);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0;
        for (int k = -radius; k <= radius; ++k) {
          const int ys = std::clamp(y + k, 0, H - 1);
          acc += kernel[k + radius] * tmp[(static_cast<std::size_t>(ys) * W + x) * C + c];
        }
        out.at(x, y, c) = clamp_u8(acc);
      }
    }
  }
  return out;
}

GradientField sobel_gradients(const Image& gray) {
  require_gray(gray, "sobel_gradients");
  const int W = gray.width, H = gray.height;
  GradientField g;
  g.width = W;
  g.height = H;
  g.gx.resize(gray.pixel_count());
  g.gy.resize(gray.pixel_count());
  for (int y = 0; y < H; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, H - 1);
    for (int x = 0; x < W; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, W - 1);
      const int tl = gray.at(xm, ym), tc = gray.at(x, ym), tr = gray.at(xp, ym);
      const int ml = gray.at(xm, y), mr = gray.at(xp, y);
      const int bl = gray.at(xm, yp), bc = gray.at(x, yp), br = gray.at(xp, yp);
      const auto i = g.index(x, y);
      g.gx[i] = static_cast<std::int16_t>((tr + 2 * mr + br) - (tl + 2 * ml + bl));
      g.gy[i] = static_cast<std::int16_t>((bl + 2 * bc + br) - (tl + 2 * tc + tr));
    }
  }
  return g;
}

Histogram256 histogram(const Image& gray) {
  require_gray(gray, "histogram");
  Histogram256 h{};
  for (std::uint8_t v : gray.data) ++h[v];
  return h;
}

OtsuChoice otsu_from_histogram(const Histogram256& hist) {
  using boost::multiprecision::int256_t;
  std::int64_t total = 0, total_sum = 0;
  for (int v = 0; v < 256; ++v) {
    total += static_cast<std::int64_t>(hist[v]);
    total_sum += static_cast<std::int64_t>(hist[v]) * v;
  }
  if (total == 0) throw InvalidArgument("otsu: empty histogram");

  // sigma_b^2(t) * N^2 = (N*S0 - n0*S)^2 / (n0 * n1); compared as exact fractions.
  int best_t = -1;
  int256_t best_num = 0, best_den = 1;
  std::int64_t n0 = 0, s0 = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += static_cast<std::int64_t>(hist[t]);
    s0 += static_cast<std::int64_t>(hist[t]) * t;
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const int256_t p = int256_t(total) * s0 - int256_t(n0) * total_sum;
    const int256_t num = p * p;
    const int256_t den = int256_t(n0) * n1;
    if (best_t < 0 || num * best_den > best_num * den) {
      best_t = t;
      best_num = num;
      best_den = den;
    }
  }
  if (best_t < 0) {
    for (int v = 0; v < 256; ++v)
      if (hist[v] != 0) return {v, true};
  }
  return {best_t, false};
}

Image binarize(const Image& gray, int threshold) {
  require_gray(gray, "binarize");
  Image out(gray.width, gray.height, 1);
  for (std::size_t i = 0; i < gray.data.size(); ++i) out.data[i] = gray.data[i] > threshold ? 255 : 0;
  return out;
}

OtsuResult otsu_threshold(const Image& gray) {
  const OtsuChoice choice = otsu_from_histogram(histogram(gray));
  return {choice.threshold, choice.degenerate, binarize(gray, choice.threshold)};
}

}  // namespace rim
