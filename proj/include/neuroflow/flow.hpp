#pragma once

#include <string>
#include <variant>
#include <vector>

#include "neuroflow/geometry.hpp"
#include "neuroflow/image.hpp"

namespace neuroflow {

struct FarnebackParams {
  int pyramid_levels = 3;
  double pyramid_scale = 0.5;
  double window_sigma = 7.5;  // Gaussian averaging of the normal equations
  int iterations = 3;         // per pyramid level
  int poly_n = 7;             // odd expansion window
  double poly_sigma = 1.5;

  void validate() const;
};

struct BlockMatchParams {
  int block = 8;
  int search_radius = 4;

  void validate() const;
};

/// Child-process backend. `command` is run through the shell after replacing
/// {prev}, {curr} and {out} with the two input PGM paths and the .flo output.
struct ExternalParams {
  std::string command;
  int max_concurrent = 1;
  int padding = 32;  // context added around each ROI before invoking the tool

  void validate() const;
};

using FlowBackendSpec = std::variant<FarnebackParams, BlockMatchParams, ExternalParams>;

std::string backend_name(const FlowBackendSpec& backend);

/// Local quadratic model f(p) ~ p^T A p + b^T p + c around a pixel, with
/// p = (x, y) relative to the pixel and A = [[axx, axy], [axy, ayy]].
struct Quadratic {
  float axx = 0, axy = 0, ayy = 0;
  float bx = 0, by = 0;
  float c = 0;
};

struct PolyExpansion {
  int width = 0;
  int height = 0;
  std::vector<Quadratic> coeffs;

  const Quadratic& at(int x, int y) const { return coeffs[static_cast<std::size_t>(y) * width + x]; }
};

/// Gaussian-weighted least-squares quadratic fit over a poly_n x poly_n
/// window at every pixel, computed with separable moment correlations.
/// Edges are clamp-to-border.
PolyExpansion poly_expansion(const RealImage& img, int poly_n, double poly_sigma);
PolyExpansion poly_expansion(const LumaFrame& frame, int poly_n, double poly_sigma);

/// Coarse-to-fine polynomial-expansion flow. The result satisfies
/// curr(x + d(x)) ~ prev(x).
FlowField farneback_flow(const LumaFrame& prev, const LumaFrame& curr, const FarnebackParams& params = {});

/// Exhaustive integer SAD search per block. Ties go to the smallest |d|,
/// then to the lexicographically smallest (dy, dx). Out-of-frame samples in
/// curr are clamped to the border.
FlowField block_match_flow(const LumaFrame& prev, const LumaFrame& curr, int block, int search_radius);

/// SAD of the block at (bx,by) of size bw x bh displaced by (dx,dy).
long long block_sad(const LumaFrame& prev, const LumaFrame& curr, int bx, int by, int bw, int bh, int dx, int dy);

/// Runs an external flow program over temporary files.
FlowField external_flow(const LumaFrame& prev, const LumaFrame& curr, const ExternalParams& params);

/// Dense flow over the whole frame with the selected backend.
FlowField compute_flow(const LumaFrame& prev, const LumaFrame& curr, const FlowBackendSpec& backend);

/// Context (px) a backend needs around a region for its interior output to
/// match a full-frame run, and the grid its crop origins must snap to.
int backend_padding(const FlowBackendSpec& backend);
int backend_alignment(const FlowBackendSpec& backend);

/// Flow restricted to regions of interest: each ROI is padded, computed,
/// and cropped back. Pixels outside every ROI are (0,0); where ROIs overlap
/// the later ROI wins.
FlowField gated_flow(const LumaFrame& prev, const LumaFrame& curr, const RoiSet& rois, const FlowBackendSpec& backend);

}  // namespace neuroflow
