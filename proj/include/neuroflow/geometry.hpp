#pragma once

#include <algorithm>
#include <vector>

namespace neuroflow {

/// Axis-aligned rectangle, top-left corner plus size, in whatever grid the
/// caller works in (pattern cells or pixels).
struct RoiRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }    // exclusive
  int bottom() const { return y + h; }   // exclusive
  long long area() const { return static_cast<long long>(w) * h; }
  bool empty() const { return w <= 0 || h <= 0; }
  bool contains(int px, int py) const { return px >= x && py >= y && px < right() && py < bottom(); }
  bool contains(const RoiRect& o) const {
    return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
  }

  bool operator==(const RoiRect&) const = default;
};

using RoiSet = std::vector<RoiRect>;

inline RoiRect intersect(const RoiRect& a, const RoiRect& b) {
  const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right()), y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return {};
  return {x0, y0, x1 - x0, y1 - y0};
}

/// Smallest rectangle containing both.
inline RoiRect bounding_union(const RoiRect& a, const RoiRect& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  const int x0 = std::min(a.x, b.x), y0 = std::min(a.y, b.y);
  const int x1 = std::max(a.right(), b.right()), y1 = std::max(a.bottom(), b.bottom());
  return {x0, y0, x1 - x0, y1 - y0};
}

/// Clip to [0,width) x [0,height); result may be empty.
inline RoiRect clamp_to(const RoiRect& r, int width, int height) {
  return intersect(r, RoiRect{0, 0, width, height});
}

/// Intersection over union of two rectangles; 0 when both are empty.
inline double rect_iou(const RoiRect& a, const RoiRect& b) {
  const long long inter = intersect(a, b).area();
  const long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace neuroflow
