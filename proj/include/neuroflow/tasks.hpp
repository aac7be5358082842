#pragma once

#include <vector>

#include "neuroflow/geometry.hpp"
#include "neuroflow/image.hpp"
#include "neuroflow/sensor.hpp"

namespace neuroflow {

/// Pattern layer (pixel resolution) stacked with the two velocity layers.
struct NeuroFlowTensor {
  int width = 0;
  int height = 0;
  BinaryImage pattern;
  FlowField flow;
};

/// Nearest-neighbour upsampling: every cell becomes an m x n tile.
BinaryImage upsample_pattern(const MotionPattern& pattern, const BinConfig& bin_cfg);

NeuroFlowTensor assemble_tensor(const MotionPattern& pattern, const BinConfig& bin_cfg, FlowField flow);

/// Windowed sinc, sinc(x)*sinc(x/n) with sinc(t) = sin(pi t)/(pi t), zero
/// outside |x| < n.
double lanczos_kernel(double x, int n);

/// Backward-warped prediction: inside the pattern layer each output pixel
/// samples `frame` at (x-u, y-v) with a separable 2n-tap Lanczos kernel
/// (weights renormalised, border clamped, result rounded to [0,255]);
/// elsewhere the input is copied.
LumaFrame warp_predict(const LumaFrame& frame, const NeuroFlowTensor& tensor, int n = 3);

struct PolarFlow {
  int width = 0;
  int height = 0;
  std::vector<float> magnitude;  // px/frame
  std::vector<float> angle;      // degrees in [0,360)
};

PolarFlow flow_to_polar(const FlowField& flow);

/// OpenCV-style 8-bit HSV: h in [0,180), s = 255, v scaled by mag_ref.
struct HsvImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> h, s, v;
};

HsvImage polar_to_hsv(const PolarFlow& polar, double mag_ref);

/// Interleaved RGB for display.
std::vector<std::uint8_t> hsv_to_rgb(const HsvImage& hsv);

enum class MorphOp { kErode, kDilate, kOpen };

/// Square structuring element of odd size; pixels outside the image count as 0.
BinaryImage morph(const BinaryImage& bin, MorphOp op, int kernel);

struct SegmentParams {
  int v_thresh = 25;     // on the 0..255 value channel
  double mag_ref = 8.0;  // px/frame mapped to v = 255
  int kernel = 3;

  void validate() const;
};

/// Value-channel threshold inside the ROIs, then erosion and dilation.
BinaryImage segment_mask(const NeuroFlowTensor& tensor, const RoiSet& rois, const SegmentParams& params = {});

struct TrackBox {
  RoiRect rect;
  double score = 0.0;  // mean flow magnitude inside rect
};

/// Contours of the mask -> bounding rects; rects with area below min_area are dropped.
std::vector<TrackBox> detect_boxes(const BinaryImage& mask, const FlowField& flow, int min_area);

/// Greedy NMS by descending score (ties: larger area, then smaller (x, y));
/// a box is dropped when its IoU with a kept box is >= iou_thresh.
std::vector<TrackBox> nms_boxes(std::vector<TrackBox> boxes, double iou_thresh);

struct TrackParams {
  int kernel = 3;
  int min_area = 16;
  double nms_iou = 0.5;
};

/// Polar conversion, value threshold inside ROIs, opening, contours, NMS.
std::vector<TrackBox> track_objects(const NeuroFlowTensor& tensor, const RoiSet& rois, const SegmentParams& seg,
                                    const TrackParams& params);

}  // namespace neuroflow
