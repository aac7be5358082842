#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "neuroflow/error.hpp"

namespace neuroflow {

/// Row-major single-channel raster. The tag parameter keeps rasters with
/// the same pixel type but different meaning (intensity vs. mask) apart.
template <class T, class Tag = void>
struct Image {
  using value_type = T;

  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), data(checked_size(w, h), fill) {}

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(int w, int h) const { return width == w && height == h; }
  template <class O>
  bool same_shape(const O& other) const { return width == other.width && height == other.height; }

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  /// Clamp-to-border access.
  const T& clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width ? width - 1 : x);
    y = y < 0 ? 0 : (y >= height ? height - 1 : y);
    return at(x, y);
  }

  std::span<T> row(int y) { return {data.data() + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width)}; }
  std::span<const T> row(int y) const {
    return {data.data() + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width)};
  }

  bool operator==(const Image&) const = default;

 private:
  static std::size_t checked_size(int w, int h) {
    require(w >= 0 && h >= 0, "image dimensions must be non-negative");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }
};

struct LumaTag;
struct MaskTag;

/// 8-bit intensity frame.
using LumaFrame = Image<std::uint8_t, LumaTag>;
/// Binary raster with values in {0,1}.
using BinaryImage = Image<std::uint8_t, MaskTag>;
/// Binary motion pattern at memristor-array resolution (1 = moving).
using MotionPattern = BinaryImage;
using RealImage = Image<float>;
using CellGrid = Image<double>;

/// Per-pixel displacement in px/frame. Positive u points right, positive v down.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h), u(static_cast<std::size_t>(w) * h, 0.f), v(static_cast<std::size_t>(w) * h, 0.f) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool operator==(const FlowField&) const = default;
};

template <class Img>
Img crop(const Img& src, int x0, int y0, int w, int h) {
  require(x0 >= 0 && y0 >= 0 && w >= 0 && h >= 0 && x0 + w <= src.width && y0 + h <= src.height,
          "crop rectangle outside image");
  Img out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = src.at(x0 + x, y0 + y);
  return out;
}

FlowField crop(const FlowField& src, int x0, int y0, int w, int h);

template <class Dst, class Src>
Dst convert(const Src& src) {
  Dst out(src.width, src.height);
  for (std::size_t i = 0; i < src.data.size(); ++i)
    out.data[i] = static_cast<typename Dst::value_type>(src.data[i]);
  return out;
}

}  // namespace neuroflow
