#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "neuroflow/geometry.hpp"
#include "neuroflow/image.hpp"
#include "neuroflow/tasks.hpp"

namespace neuroflow {

enum class SsimMode { kGlobal, kWindowed };

struct SsimConstants {
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 255.0;
};

/// Structural similarity. Global mode uses whole-image moments; windowed
/// mode averages over non-overlapping 8x8 windows (images smaller than one
/// window fall back to global).
double ssim(const LumaFrame& x, const LumaFrame& y, SsimMode mode = SsimMode::kGlobal, const SsimConstants& k = {});

/// Fraction of pixels on which the two masks agree.
double pixel_accuracy(const BinaryImage& pred, const BinaryImage& gt);

/// |A n B| / |A u B|; throws kUndefinedIou when both are empty.
double iou_pair(const RoiRect& a, const RoiRect& b);
double iou_pair(const BinaryImage& a, const BinaryImage& b);

/// Each prediction is matched to at most one ground-truth box, greedily by
/// highest IoU; the sum of matched IoUs is divided by the number of
/// predictions. No predictions gives 0.
double mean_box_iou(const std::vector<RoiRect>& pred, const std::vector<RoiRect>& gt);
double mean_box_iou(const std::vector<TrackBox>& pred, const std::vector<RoiRect>& gt);

struct FrameMetrics {
  int frame = 0;
  std::optional<double> ssim;
  std::optional<double> pa;
  std::optional<double> mean_iou;
};

struct MetricsReport {
  std::vector<FrameMetrics> frames;
  std::map<std::string, std::vector<double>> stage_seconds;  // per frame, per stage

  double total_seconds(const std::string& stage) const;
  std::optional<double> mean_ssim() const;
  std::optional<double> mean_pa() const;
  std::optional<double> mean_iou() const;

  std::string to_json() const;
};

}  // namespace neuroflow
