#include "neuroflow/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"

namespace neuroflow {

namespace {

struct Moments {
  double mx = 0, my = 0, vx = 0, vy = 0, cov = 0;
};

Moments window_moments(const LumaFrame& x, const LumaFrame& y, int x0, int y0, int w, int h) {
  Moments m;
  const double n = static_cast<double>(w) * h;
  for (int r = y0; r < y0 + h; ++r)
    for (int c = x0; c < x0 + w; ++c) m.mx += x.at(c, r), m.my += y.at(c, r);
  m.mx /= n, m.my /= n;
  for (int r = y0; r < y0 + h; ++r)
    for (int c = x0; c < x0 + w; ++c) {
      const double dx = x.at(c, r) - m.mx, dy = y.at(c, r) - m.my;
      m.vx += dx * dx, m.vy += dy * dy, m.cov += dx * dy;
    }
  m.vx /= n, m.vy /= n, m.cov /= n;
  return m;
}

double ssim_from(const Moments& m, double c1, double c2) {
  return ((2 * m.mx * m.my + c1) * (2 * m.cov + c2)) / ((m.mx * m.mx + m.my * m.my + c1) * (m.vx + m.vy + c2));
}

template <class T>
std::optional<double> mean_of(const std::vector<FrameMetrics>& frames, T FrameMetrics::*field) {
  double sum = 0;
  int n = 0;
  for (const auto& f : frames)
    if ((f.*field).has_value()) sum += *(f.*field), ++n;
  if (n == 0) return std::nullopt;
  return sum / n;
}

}  // namespace

double ssim(const LumaFrame& x, const LumaFrame& y, SsimMode mode, const SsimConstants& k) {
  if (!x.same_shape(y)) fail(ErrorCode::kDimensionMismatch, "ssim inputs differ in size");
  require(!x.empty(), "ssim of empty images");
  const double c1 = (k.k1 * k.range) * (k.k1 * k.range), c2 = (k.k2 * k.range) * (k.k2 * k.range);
  constexpr int kWin = 8;
  if (mode == SsimMode::kGlobal || x.width < kWin || x.height < kWin)
    return ssim_from(window_moments(x, y, 0, 0, x.width, x.height), c1, c2);
  double sum = 0.0;
  int count = 0;
  for (int r = 0; r + kWin <= x.height; r += kWin)
    for (int c = 0; c + kWin <= x.width; c += kWin) {
      sum += ssim_from(window_moments(x, y, c, r, kWin, kWin), c1, c2);
      ++count;
    }
  return sum / count;
}

double pixel_accuracy(const BinaryImage& pred, const BinaryImage& gt) {
  if (!pred.same_shape(gt)) fail(ErrorCode::kDimensionMismatch, "masks differ in size");
  require(!gt.empty(), "pixel accuracy of empty masks");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) correct += (pred.data[i] != 0) == (gt.data[i] != 0);
  return static_cast<double>(correct) / static_cast<double>(gt.size());
}

double iou_pair(const RoiRect& a, const RoiRect& b) {
  if (a.empty() && b.empty()) fail(ErrorCode::kUndefinedIou, "IoU of two empty rectangles");
  return rect_iou(a, b);
}

double iou_pair(const BinaryImage& a, const BinaryImage& b) {
  if (!a.same_shape(b)) fail(ErrorCode::kDimensionMismatch, "masks differ in size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool pa = a.data[i] != 0, pb = b.data[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  if (uni == 0) fail(ErrorCode::kUndefinedIou, "IoU of two empty masks");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_box_iou(const std::vector<RoiRect>& pred, const std::vector<RoiRect>& gt) {
  require(!gt.empty(), "mean box IoU needs at least one ground-truth box");
  if (pred.empty()) return 0.0;
  struct Pair {
    double iou;
    std::size_t p, g;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < pred.size(); ++p)
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double v = rect_iou(pred[p], gt[g]);
      if (v > 0.0) pairs.push_back({v, p, g});
    }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
  std::vector<bool> pred_used(pred.size()), gt_used(gt.size());
  double sum = 0.0;
  for (const auto& pair : pairs) {
    if (pred_used[pair.p] || gt_used[pair.g]) continue;
    pred_used[pair.p] = gt_used[pair.g] = true;
    sum += pair.iou;
  }
  return sum / static_cast<double>(pred.size());
}

double mean_box_iou(const std::vector<TrackBox>& pred, const std::vector<RoiRect>& gt) {
  std::vector<RoiRect> rects;
  rects.reserve(pred.size());
  for (const auto& b : pred) rects.push_back(b.rect);
  return mean_box_iou(rects, gt);
}

double MetricsReport::total_seconds(const std::string& stage) const {
  const auto it = stage_seconds.find(stage);
  if (it == stage_seconds.end()) return 0.0;
  return std::accumulate(it->second.begin(), it->second.end(), 0.0);
}

std::optional<double> MetricsReport::mean_ssim() const { return mean_of(frames, &FrameMetrics::ssim); }
std::optional<double> MetricsReport::mean_pa() const { return mean_of(frames, &FrameMetrics::pa); }
std::optional<double> MetricsReport::mean_iou() const { return mean_of(frames, &FrameMetrics::mean_iou); }

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  auto column = [&](std::optional<double> FrameMetrics::*field) {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& f : frames) values.push_back((f.*field).has_value() ? nlohmann::json(*(f.*field)) : nlohmann::json());
    return values;
  };
  nlohmann::json index = nlohmann::json::array();
  for (const auto& f : frames) index.push_back(f.frame);
  j["frames"] = index;
  j["ssim"] = column(&FrameMetrics::ssim);
  j["pa"] = column(&FrameMetrics::pa);
  j["mean_iou"] = column(&FrameMetrics::mean_iou);
  nlohmann::ordered_json timings;
  for (const auto& [stage, seconds] : stage_seconds) timings[stage] = seconds;
  j["stage_seconds"] = timings;
  return j.dump(2);
}

}  // namespace neuroflow
