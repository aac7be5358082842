#include "neuroflow/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neuroflow/prefilter.hpp"

namespace neuroflow {

BinaryImage upsample_pattern(const MotionPattern& pattern, const BinConfig& bin_cfg) {
  bin_cfg.validate();
  BinaryImage out(pattern.width * bin_cfg.n, pattern.height * bin_cfg.m);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(x, y) = pattern.at(x / bin_cfg.n, y / bin_cfg.m) ? 1 : 0;
  return out;
}

NeuroFlowTensor assemble_tensor(const MotionPattern& pattern, const BinConfig& bin_cfg, FlowField flow) {
  if (pattern.width * bin_cfg.n != flow.width || pattern.height * bin_cfg.m != flow.height)
    fail(ErrorCode::kDimensionMismatch, "pattern " + std::to_string(pattern.width) + "x" +
                                            std::to_string(pattern.height) + " does not tile flow " +
                                            std::to_string(flow.width) + "x" + std::to_string(flow.height));
  NeuroFlowTensor t;
  t.width = flow.width;
  t.height = flow.height;
  t.pattern = upsample_pattern(pattern, bin_cfg);
  t.flow = std::move(flow);
  return t;
}

double lanczos_kernel(double x, int n) {
  require(n >= 1, "lanczos order must be >= 1");
  const double ax = std::abs(x);
  if (ax >= n) return 0.0;
  if (x == 0.0) return 1.0;
  if (ax == std::floor(ax)) return 0.0;  // sin(pi*k) vanishes at nonzero integers
  const double px = M_PI * x;
  return (std::sin(px) / px) * (std::sin(px / n) / (px / n));
}

namespace {

struct Taps {
  int first = 0;
  std::vector<double> w;
};

Taps lanczos_taps(double s, int n) {
  Taps t;
  const int base = static_cast<int>(std::floor(s));
  t.first = base - n + 1;
  t.w.resize(static_cast<std::size_t>(2 * n));
  double sum = 0.0;
  for (int i = 0; i < 2 * n; ++i) sum += t.w[static_cast<std::size_t>(i)] = lanczos_kernel(s - (t.first + i), n);
  for (auto& w : t.w) w /= sum;
  return t;
}

}  // namespace

LumaFrame warp_predict(const LumaFrame& frame, const NeuroFlowTensor& tensor, int n) {
  require(n >= 1, "lanczos order must be >= 1");
  if (!frame.same_shape(tensor.width, tensor.height) || !tensor.pattern.same_shape(frame) ||
      tensor.flow.width != frame.width || tensor.flow.height != frame.height)
    fail(ErrorCode::kDimensionMismatch, "frame and tensor differ in size");

  LumaFrame out = frame;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!tensor.pattern.at(x, y)) continue;
      const std::size_t i = tensor.flow.index(x, y);
      const Taps tx = lanczos_taps(x - static_cast<double>(tensor.flow.u[i]), n);
      const Taps ty = lanczos_taps(y - static_cast<double>(tensor.flow.v[i]), n);
      double acc = 0.0;
      for (int j = 0; j < 2 * n; ++j) {
        const double wy = ty.w[static_cast<std::size_t>(j)];
        if (wy == 0.0) continue;
        double row = 0.0;
        for (int k = 0; k < 2 * n; ++k) {
          const double wx = tx.w[static_cast<std::size_t>(k)];
          if (wx != 0.0) row += wx * frame.clamped(tx.first + k, ty.first + j);
        }
        acc += wy * row;
      }
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
    }
  }
  return out;
}

PolarFlow flow_to_polar(const FlowField& flow) {
  PolarFlow p{flow.width, flow.height, std::vector<float>(flow.u.size()), std::vector<float>(flow.u.size())};
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    const double u = flow.u[i], v = flow.v[i];
    p.magnitude[i] = static_cast<float>(std::hypot(u, v));
    double a = std::atan2(v, u) * 180.0 / M_PI;
    if (a < 0.0) a += 360.0;
    if (a >= 360.0) a -= 360.0;
    p.angle[i] = static_cast<float>(a);
  }
  return p;
}

HsvImage polar_to_hsv(const PolarFlow& polar, double mag_ref) {
  require(mag_ref > 0.0, "mag_ref must be positive");
  const std::size_t count = polar.magnitude.size();
  HsvImage hsv{polar.width, polar.height, std::vector<std::uint8_t>(count), std::vector<std::uint8_t>(count, 255),
               std::vector<std::uint8_t>(count)};
  for (std::size_t i = 0; i < count; ++i) {
    hsv.h[i] = static_cast<std::uint8_t>(std::min(179.0, std::floor(polar.angle[i] / 2.0)));
    hsv.v[i] = static_cast<std::uint8_t>(std::min(255L, std::lround(255.0 * polar.magnitude[i] / mag_ref)));
  }
  return hsv;
}

std::vector<std::uint8_t> hsv_to_rgb(const HsvImage& hsv) {
  std::vector<std::uint8_t> rgb(hsv.h.size() * 3);
  for (std::size_t i = 0; i < hsv.h.size(); ++i) {
    const double h = hsv.h[i] * 2.0 / 60.0, s = hsv.s[i] / 255.0, v = hsv.v[i] / 255.0;
    const double c = v * s, xc = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0)), m = v - c;
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h) % 6) {
      case 0: r = c, g = xc; break;
      case 1: r = xc, g = c; break;
      case 2: g = c, b = xc; break;
      case 3: g = xc, b = c; break;
      case 4: r = xc, b = c; break;
      default: r = c, b = xc; break;
    }
    rgb[3 * i] = static_cast<std::uint8_t>(std::lround(255.0 * (r + m)));
    rgb[3 * i + 1] = static_cast<std::uint8_t>(std::lround(255.0 * (g + m)));
    rgb[3 * i + 2] = static_cast<std::uint8_t>(std::lround(255.0 * (b + m)));
  }
  return rgb;
}

namespace {

// Separable min/max filter; outside the image counts as 0.
BinaryImage square_filter(const BinaryImage& bin, int radius, bool dilate) {
  auto pass = [&](const BinaryImage& src, bool horizontal) {
    BinaryImage dst(src.width, src.height);
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x) {
        std::uint8_t acc = dilate ? 0 : 1;
        for (int k = -radius; k <= radius; ++k) {
          const int sx = horizontal ? x + k : x, sy = horizontal ? y : y + k;
          const bool inside = sx >= 0 && sy >= 0 && sx < src.width && sy < src.height;
          const std::uint8_t val = inside && src.at(sx, sy) ? 1 : 0;
          if (dilate && val) { acc = 1; break; }
          if (!dilate && !val) { acc = 0; break; }
        }
        dst.at(x, y) = acc;
      }
    return dst;
  };
  return pass(pass(bin, true), false);
}

}  // namespace

BinaryImage morph(const BinaryImage& bin, MorphOp op, int kernel) {
  require(kernel >= 1 && kernel % 2 == 1, "morphology kernel must be odd and >= 1");
  const int r = kernel / 2;
  switch (op) {
    case MorphOp::kErode: return square_filter(bin, r, false);
    case MorphOp::kDilate: return square_filter(bin, r, true);
    case MorphOp::kOpen: return square_filter(square_filter(bin, r, false), r, true);
  }
  return bin;
}

void SegmentParams::validate() const {
  require(v_thresh >= 0 && v_thresh < 255, "v_thresh must lie in [0,255)");
  require(mag_ref > 0.0, "mag_ref must be positive");
  require(kernel >= 1 && kernel % 2 == 1, "morphology kernel must be odd and >= 1");
}

BinaryImage segment_mask(const NeuroFlowTensor& tensor, const RoiSet& rois, const SegmentParams& params) {
  params.validate();
  const FlowField& flow = tensor.flow;
  BinaryImage mask(flow.width, flow.height, 0);
  for (const auto& roi : rois) {
    const RoiRect r = clamp_to(roi, flow.width, flow.height);
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x = r.x; x < r.right(); ++x) {
        const std::size_t i = flow.index(x, y);
        const double mag = std::hypot(static_cast<double>(flow.u[i]), static_cast<double>(flow.v[i]));
        const long value = std::min(255L, std::lround(255.0 * mag / params.mag_ref));
        mask.at(x, y) = value > params.v_thresh ? 1 : 0;
      }
  }
  return morph(mask, MorphOp::kOpen, params.kernel);
}

std::vector<TrackBox> detect_boxes(const BinaryImage& mask, const FlowField& flow, int min_area) {
  require(min_area >= 1, "min_area must be >= 1");
  if (mask.width != flow.width || mask.height != flow.height)
    fail(ErrorCode::kDimensionMismatch, "mask and flow differ in size");
  std::vector<TrackBox> boxes;
  for (const auto& contour : find_contours(mask)) {
    const RoiRect r = bounding_rect(contour);
    if (r.area() < min_area) continue;
    double sum = 0.0;
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x = r.x; x < r.right(); ++x) {
        const std::size_t i = flow.index(x, y);
        sum += std::hypot(static_cast<double>(flow.u[i]), static_cast<double>(flow.v[i]));
      }
    boxes.push_back({r, sum / static_cast<double>(r.area())});
  }
  return boxes;
}

std::vector<TrackBox> nms_boxes(std::vector<TrackBox> boxes, double iou_thresh) {
  require(iou_thresh > 0.0 && iou_thresh < 1.0, "NMS IoU threshold must lie in (0,1)");
  std::stable_sort(boxes.begin(), boxes.end(), [](const TrackBox& a, const TrackBox& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.rect.area() != b.rect.area()) return a.rect.area() > b.rect.area();
    if (a.rect.x != b.rect.x) return a.rect.x < b.rect.x;
    return a.rect.y < b.rect.y;
  });
  std::vector<TrackBox> kept;
  for (const auto& box : boxes) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                        [&](const TrackBox& k) { return rect_iou(box.rect, k.rect) >= iou_thresh; });
    if (!suppressed) kept.push_back(box);
  }
  return kept;
}

std::vector<TrackBox> track_objects(const NeuroFlowTensor& tensor, const RoiSet& rois, const SegmentParams& seg,
                                    const TrackParams& params) {
  SegmentParams opened = seg;
  opened.kernel = params.kernel;
  return nms_boxes(detect_boxes(segment_mask(tensor, rois, opened), tensor.flow, params.min_area), params.nms_iou);
}

}  // namespace neuroflow
