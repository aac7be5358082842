#pragma once

#include <vector>

#include "neuroflow/geometry.hpp"
#include "neuroflow/image.hpp"
#include "neuroflow/sensor.hpp"

namespace neuroflow {

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
};

using Contour = std::vector<Point>;

struct PrefilterParams {
  double blur_sigma = 1.0;       // in pattern cells
  double edge_thresh_frac = 0.1; // of the Sobel magnitude bound for a [0,1] input
  double expand = 0.25;          // per side, times max(w,h)
  bool merge = true;
  double merge_iou = 0.3;

  void validate() const;
};

/// Upper bound on the Sobel gradient magnitude of an image with values in [0,1].
inline constexpr double kSobelUnitMagnitudeBound = 5.656854249492380;  // 4*sqrt(2)

/// Sampled Gaussian, radius ceil(3*sigma), normalised to sum 1.
std::vector<float> gaussian_kernel(double sigma);

/// Separable Gaussian blur with clamp-to-border edges.
RealImage gaussian_blur(const RealImage& img, double sigma);

/// Separable convolution with a symmetric odd-length kernel, clamp-to-border.
RealImage separable_filter(const RealImage& img, const std::vector<float>& kernel);

struct Gradients {
  RealImage gx;
  RealImage gy;
};

/// 3x3 Sobel pair with clamp-to-border. gx responds to left-to-right
/// increase, gy to top-to-bottom increase.
Gradients sobel_gradients(const RealImage& img);

/// Non-maximum suppression along the gradient direction (quantised to
/// 0/45/90/135 degrees) followed by a strict magnitude threshold.
BinaryImage edge_thin_binarize(const RealImage& gx, const RealImage& gy, double thresh);

/// One outer border per 8-connected foreground component, traced by Moore
/// neighbour following from the component's topmost-leftmost pixel,
/// counterclockwise as displayed (down the left side first).
std::vector<Contour> find_contours(const BinaryImage& bin);

/// 8-connected component labels (0 = background, components numbered from 1
/// in raster order of their first pixel). Returns the component count.
int label_components(const BinaryImage& bin, Image<int>& labels);

RoiRect bounding_rect(const Contour& contour);

/// Inflates a rect by ceil(expand*max(w,h)) on each side and clips it.
RoiRect expand_rect(const RoiRect& r, double expand, int width, int height);

/// Repeatedly replaces any pair with IoU >= threshold by its bounding union.
RoiSet merge_overlapping(RoiSet rois, double iou_threshold);

/// Bounding rect per contour, expanded and clipped to [0,width)x[0,height),
/// optionally merged.
RoiSet rois_from_contours(const std::vector<Contour>& contours, const PrefilterParams& params, int width, int height);

/// Motion pattern -> pixel-space regions of interest: blur, Sobel, thin,
/// contours, rectangles, then scale by the bin size.
RoiSet pattern_to_rois(const MotionPattern& pattern, const BinConfig& bin_cfg, int frame_width, int frame_height,
                       const PrefilterParams& params = {});

}  // namespace neuroflow
