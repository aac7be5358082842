#include "neuroflow/prefilter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace neuroflow {

void PrefilterParams::validate() const {
  require(blur_sigma > 0.0, "prefilter blur sigma must be positive");
  require(edge_thresh_frac > 0.0, "edge threshold must be positive");
  require(expand >= 0.0, "roi expansion must be non-negative");
  require(!merge || (merge_iou > 0.0 && merge_iou <= 1.0), "merge IoU must lie in (0,1]");
}

std::vector<float> gaussian_kernel(double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), "gaussian sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    w[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += w[static_cast<std::size_t>(i + radius)];
  }
  std::vector<float> kernel(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) kernel[i] = static_cast<float>(w[i] / sum);
  return kernel;
}

RealImage separable_filter(const RealImage& img, const std::vector<float>& kernel) {
  require(kernel.size() % 2 == 1, "kernel length must be odd");
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = img.width, h = img.height;
  RealImage tmp(w, h, 0.f);
  // Vertical pass, accumulating whole rows.
  for (int y = 0; y < h; ++y) {
    float* out = tmp.row(y).data();
    for (int k = -radius; k <= radius; ++k) {
      const int sy = std::clamp(y + k, 0, h - 1);
      const float wk = kernel[static_cast<std::size_t>(k + radius)];
      const float* in = img.row(sy).data();
      for (int x = 0; x < w; ++x) out[x] += wk * in[x];
    }
  }
  // Horizontal pass over a clamp-padded copy of each row.
  RealImage out(w, h);
  std::vector<float> padded(static_cast<std::size_t>(w + 2 * radius));
  for (int y = 0; y < h; ++y) {
    const float* in = tmp.row(y).data();
    for (int x = -radius; x < w + radius; ++x) padded[static_cast<std::size_t>(x + radius)] = in[std::clamp(x, 0, w - 1)];
    float* dst = out.row(y).data();
    for (int x = 0; x < w; ++x) {
      float acc = 0.f;
      const float* src = padded.data() + x;
      for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * src[k];
      dst[x] = acc;
    }
  }
  return out;
}

RealImage gaussian_blur(const RealImage& img, double sigma) {
  return separable_filter(img, gaussian_kernel(sigma));
}

Gradients sobel_gradients(const RealImage& img) {
  if (img.width < 3 || img.height < 3) fail(ErrorCode::kInvalidArgument, "sobel needs an image of at least 3x3");
  Gradients g{RealImage(img.width, img.height), RealImage(img.width, img.height)};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float tl = img.clamped(x - 1, y - 1), tc = img.clamped(x, y - 1), tr = img.clamped(x + 1, y - 1);
      const float ml = img.clamped(x - 1, y), mr = img.clamped(x + 1, y);
      const float bl = img.clamped(x - 1, y + 1), bc = img.clamped(x, y + 1), br = img.clamped(x + 1, y + 1);
      g.gx.at(x, y) = (tr + 2.f * mr + br) - (tl + 2.f * ml + bl);
      g.gy.at(x, y) = (bl + 2.f * bc + br) - (tl + 2.f * tc + tr);
    }
  }
  return g;
}

BinaryImage edge_thin_binarize(const RealImage& gx, const RealImage& gy, double thresh) {
  require(thresh > 0.0, "edge threshold must be positive");
  if (!gx.same_shape(gy)) fail(ErrorCode::kDimensionMismatch, "gradient images differ in shape");
  const int w = gx.width, h = gx.height;
  RealImage mag(w, h);
  for (std::size_t i = 0; i < mag.size(); ++i) mag.data[i] = std::hypot(gx.data[i], gy.data[i]);
  auto m = [&](int x, int y) -> float { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.f : mag.at(x, y); };

  BinaryImage out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float here = mag.at(x, y);
      if (!(here > thresh)) continue;
      double angle = std::atan2(gy.at(x, y), gx.at(x, y)) * 180.0 / M_PI;
      if (angle < 0.0) angle += 180.0;
      int dx = 1, dy = 0;  // 0 degrees
      if (angle >= 22.5 && angle < 67.5) {
        dx = 1, dy = 1;  // y grows downward
      } else if (angle >= 67.5 && angle < 112.5) {
        dx = 0, dy = 1;
      } else if (angle >= 112.5 && angle < 157.5) {
        dx = -1, dy = 1;
      }
      if (here >= m(x + dx, y + dy) && here >= m(x - dx, y - dy)) out.at(x, y) = 1;
    }
  }
  return out;
}

int label_components(const BinaryImage& bin, Image<int>& labels) {
  labels = Image<int>(bin.width, bin.height, 0);
  int count = 0;
  std::vector<Point> stack;
  for (int y = 0; y < bin.height; ++y) {
    for (int x = 0; x < bin.width; ++x) {
      if (!bin.at(x, y) || labels.at(x, y)) continue;
      ++count;
      labels.at(x, y) = count;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= bin.width || ny >= bin.height) continue;
            if (bin.at(nx, ny) && !labels.at(nx, ny)) {
              labels.at(nx, ny) = count;
              stack.push_back({nx, ny});
            }
          }
      }
    }
  }
  return count;
}

namespace {

// Indexed counterclockwise as displayed: E, NE, N, NW, W, SW, S, SE.
constexpr std::array<Point, 8> kDirs{{{1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

Contour trace_border(const BinaryImage& bin, Point start) {
  auto fg = [&](int x, int y) { return x >= 0 && y >= 0 && x < bin.width && y < bin.height && bin.at(x, y) != 0; };

  // Returns the direction of the next border pixel, or -1 for an isolated pixel.
  auto next_dir = [&](Point p, int search_from) {
    for (int i = 0; i < 8; ++i) {
      const int d = (search_from + i) % 8;
      if (fg(p.x + kDirs[d].x, p.y + kDirs[d].y)) return d;
    }
    return -1;
  };

  Contour contour{start};
  const int first = next_dir(start, 4);  // west of the raster-first pixel is background
  if (first < 0) return contour;
  const Point second{start.x + kDirs[first].x, start.y + kDirs[first].y};

  Point current = second;
  int dir = first;
  const std::size_t limit = 4 * bin.size() + 8;
  while (contour.size() < limit) {
    // Resume the search at the last background pixel examined.
    const int search_from = (dir + 6 - (dir & 1)) % 8;
    const int d = next_dir(current, search_from);
    const Point next{current.x + kDirs[d].x, current.y + kDirs[d].y};
    if (current == start && next == second) break;
    contour.push_back(current);
    current = next;
    dir = d;
  }
  return contour;
}

}  // namespace

std::vector<Contour> find_contours(const BinaryImage& bin) {
  Image<int> labels;
  const int count = label_components(bin, labels);
  std::vector<Contour> contours;
  contours.reserve(static_cast<std::size_t>(count));
  int next_label = 1;
  for (int y = 0; y < bin.height && next_label <= count; ++y)
    for (int x = 0; x < bin.width; ++x)
      if (labels.at(x, y) == next_label) {
        contours.push_back(trace_border(bin, {x, y}));
        ++next_label;
      }
  return contours;
}

RoiRect bounding_rect(const Contour& contour) {
  if (contour.empty()) return {};
  int x0 = contour.front().x, x1 = x0, y0 = contour.front().y, y1 = y0;
  for (const auto& p : contour) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

RoiRect expand_rect(const RoiRect& r, double expand, int width, int height) {
  require(expand >= 0.0, "expansion must be non-negative");
  const int grow = static_cast<int>(std::ceil(expand * std::max(r.w, r.h) - 1e-9));
  return clamp_to({r.x - grow, r.y - grow, r.w + 2 * grow, r.h + 2 * grow}, width, height);
}

RoiSet merge_overlapping(RoiSet rois, double iou_threshold) {
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < rois.size() && !merged; ++i)
      for (std::size_t j = i + 1; j < rois.size(); ++j)
        if (rect_iou(rois[i], rois[j]) >= iou_threshold) {
          rois[i] = bounding_union(rois[i], rois[j]);
          rois.erase(rois.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
          break;
        }
  }
  return rois;
}

RoiSet rois_from_contours(const std::vector<Contour>& contours, const PrefilterParams& params, int width, int height) {
  params.validate();
  RoiSet rois;
  for (const auto& c : contours) {
    const RoiRect r = expand_rect(bounding_rect(c), params.expand, width, height);
    if (!r.empty()) rois.push_back(r);
  }
  return params.merge ? merge_overlapping(std::move(rois), params.merge_iou) : rois;
}

RoiSet pattern_to_rois(const MotionPattern& pattern, const BinConfig& bin_cfg, int frame_width, int frame_height,
                       const PrefilterParams& params) {
  bin_cfg.validate();
  params.validate();
  if (pattern.width * bin_cfg.n != frame_width || pattern.height * bin_cfg.m != frame_height)
    fail(ErrorCode::kDimensionMismatch, "pattern " + std::to_string(pattern.width) + "x" +
                                            std::to_string(pattern.height) + " does not tile a " +
                                            std::to_string(frame_width) + "x" + std::to_string(frame_height) + " frame");
  if (std::none_of(pattern.data.begin(), pattern.data.end(), [](std::uint8_t b) { return b != 0; })) return {};

  const RealImage blurred = gaussian_blur(convert<RealImage>(pattern), params.blur_sigma);
  const Gradients g = sobel_gradients(blurred);
  const BinaryImage edges = edge_thin_binarize(g.gx, g.gy, params.edge_thresh_frac * kSobelUnitMagnitudeBound);
  const RoiSet cells = rois_from_contours(find_contours(edges), params, pattern.width, pattern.height);

  RoiSet pixels;
  pixels.reserve(cells.size());
  for (const auto& r : cells) pixels.push_back({r.x * bin_cfg.n, r.y * bin_cfg.m, r.w * bin_cfg.n, r.h * bin_cfg.m});
  return pixels;
}

}  // namespace neuroflow
