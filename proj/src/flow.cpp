#include "neuroflow/flow.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <limits>
#include <mutex>
#include <tuple>

#include "neuroflow/frame_io.hpp"
#include "neuroflow/prefilter.hpp"

namespace neuroflow {

namespace fs = std::filesystem;

void FarnebackParams::validate() const {
  require(pyramid_levels >= 1, "pyramid_levels must be >= 1");
  require(pyramid_scale > 0.0 && pyramid_scale < 1.0, "pyramid_scale must lie in (0,1)");
  require(window_sigma > 0.0, "window_sigma must be positive");
  require(iterations >= 1, "iterations must be >= 1");
  require(poly_n >= 3 && poly_n % 2 == 1, "poly_n must be odd and >= 3");
  require(poly_sigma > 0.0, "poly_sigma must be positive");
}

void BlockMatchParams::validate() const {
  require(block >= 3, "block size must be >= 3");
  require(search_radius >= 1, "search radius must be >= 1");
}

void ExternalParams::validate() const {
  for (const char* key : {"{prev}", "{curr}", "{out}"})
    if (command.find(key) == std::string::npos)
      fail(ErrorCode::kConfig, std::string("external command template lacks placeholder ") + key);
  require(max_concurrent >= 1, "max_concurrent must be >= 1");
  require(padding >= 0, "padding must be non-negative");
}

std::string backend_name(const FlowBackendSpec& backend) {
  static constexpr std::array<const char*, 3> kNames{"farneback", "blockmatch", "external"};
  return kNames[backend.index()];
}

// ---------------------------------------------------------------------------
// Polynomial expansion

PolyExpansion poly_expansion(const RealImage& img, int poly_n, double poly_sigma) {
  require(poly_n >= 3 && poly_n % 2 == 1, "poly_n must be odd and >= 3");
  require(poly_sigma > 0.0, "poly_sigma must be positive");
  if (img.width < poly_n || img.height < poly_n)
    fail(ErrorCode::kInvalidArgument, "image smaller than the expansion window");

  const int r = poly_n / 2;
  std::vector<double> g(static_cast<std::size_t>(poly_n));
  double gsum = 0.0;
  for (int i = -r; i <= r; ++i) gsum += g[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (poly_sigma * poly_sigma));
  double g0 = 0, g2 = 0, g4 = 0;
  for (int i = -r; i <= r; ++i) {
    const double w = g[static_cast<std::size_t>(i + r)] /= gsum;
    g0 += w, g2 += w * i * i, g4 += w * i * i * i * i;
  }

  // Gram matrix of {1, x^2, y^2} under the separable weights; x, y and xy
  // are orthogonal to everything else.
  const double m00 = g0 * g0, m01 = g0 * g2, m11 = g0 * g4, m12 = g2 * g2;
  // Inverse of [[m00, m01, m01], [m01, m11, m12], [m01, m12, m11]].
  const double det = m00 * (m11 * m11 - m12 * m12) - m01 * (m01 * m11 - m12 * m01) + m01 * (m01 * m12 - m11 * m01);
  const std::array<std::array<double, 3>, 3> inv{{
      {(m11 * m11 - m12 * m12) / det, (m01 * m12 - m01 * m11) / det, (m01 * m12 - m01 * m11) / det},
      {(m01 * m12 - m01 * m11) / det, (m00 * m11 - m01 * m01) / det, (m01 * m01 - m00 * m12) / det},
      {(m01 * m12 - m01 * m11) / det, (m01 * m01 - m00 * m12) / det, (m00 * m11 - m01 * m01) / det},
  }};
  const double inv_lin = 1.0 / (g0 * g2);
  const double inv_xy = 1.0 / (g2 * g2);

  const int w = img.width, h = img.height;
  // Vertical moments: sum_j g_j f, sum_j j g_j f, sum_j j^2 g_j f.
  std::vector<double> v0(static_cast<std::size_t>(w) * h), v1(v0.size()), v2(v0.size());
  for (int y = 0; y < h; ++y) {
    double* a0 = v0.data() + static_cast<std::size_t>(y) * w;
    double* a1 = v1.data() + static_cast<std::size_t>(y) * w;
    double* a2 = v2.data() + static_cast<std::size_t>(y) * w;
    std::fill(a0, a0 + w, 0.0), std::fill(a1, a1 + w, 0.0), std::fill(a2, a2 + w, 0.0);
    for (int j = -r; j <= r; ++j) {
      const float* src = img.row(std::clamp(y + j, 0, h - 1)).data();
      const double wj = g[static_cast<std::size_t>(j + r)];
      for (int x = 0; x < w; ++x) {
        const double f = wj * src[x];
        a0[x] += f, a1[x] += j * f, a2[x] += j * j * f;
      }
    }
  }

  PolyExpansion out{w, h, std::vector<Quadratic>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y) {
    const std::size_t base = static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      double s0 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0, syy = 0;
      for (int i = -r; i <= r; ++i) {
        const std::size_t k = base + static_cast<std::size_t>(std::clamp(x + i, 0, w - 1));
        const double wi = g[static_cast<std::size_t>(i + r)];
        s0 += wi * v0[k], sx += i * wi * v0[k], sxx += i * i * wi * v0[k];
        sy += wi * v1[k], sxy += i * wi * v1[k];
        syy += wi * v2[k];
      }
      Quadratic& q = out.coeffs[base + static_cast<std::size_t>(x)];
      q.c = static_cast<float>(inv[0][0] * s0 + inv[0][1] * sxx + inv[0][2] * syy);
      q.axx = static_cast<float>(inv[1][0] * s0 + inv[1][1] * sxx + inv[1][2] * syy);
      q.ayy = static_cast<float>(inv[2][0] * s0 + inv[2][1] * sxx + inv[2][2] * syy);
      q.bx = static_cast<float>(sx * inv_lin);
      q.by = static_cast<float>(sy * inv_lin);
      q.axy = static_cast<float>(0.5 * sxy * inv_xy);
    }
  }
  return out;
}

PolyExpansion poly_expansion(const LumaFrame& frame, int poly_n, double poly_sigma) {
  return poly_expansion(convert<RealImage>(frame), poly_n, poly_sigma);
}

// ---------------------------------------------------------------------------
// Farneback

namespace {

int scaled_size(int size, double scale) { return std::max(1, static_cast<int>(std::ceil(size * scale - 1e-9))); }

// Resamples with a fixed scale factor so that crops whose origin sits on the
// coarse grid reproduce the same samples as the full frame.
RealImage resize_bilinear(const RealImage& src, int w, int h, double scale) {
  RealImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const double sy = std::clamp((y + 0.5) / scale - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = std::min(static_cast<int>(sy), src.height - 1), y1 = std::min(y0 + 1, src.height - 1);
    const float fy = static_cast<float>(sy - y0);
    for (int x = 0; x < w; ++x) {
      const double sx = std::clamp((x + 0.5) / scale - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = std::min(static_cast<int>(sx), src.width - 1), x1 = std::min(x0 + 1, src.width - 1);
      const float fx = static_cast<float>(sx - x0);
      const float top = src.at(x0, y0) + fx * (src.at(x1, y0) - src.at(x0, y0));
      const float bot = src.at(x0, y1) + fx * (src.at(x1, y1) - src.at(x0, y1));
      out.at(x, y) = top + fy * (bot - top);
    }
  }
  return out;
}

RealImage pyramid_level(const RealImage& full, int level, double scale) {
  if (level == 0) return full;
  const double s = std::pow(scale, level);
  const RealImage smoothed = gaussian_blur(full, (1.0 / s - 1.0) * 0.5);
  return resize_bilinear(smoothed, scaled_size(full.width, s), scaled_size(full.height, s), s);
}

int usable_levels(int width, int height, const FarnebackParams& p) {
  int levels = 1;
  while (levels < p.pyramid_levels) {
    const double s = std::pow(p.pyramid_scale, levels);
    if (std::min(scaled_size(width, s), scaled_size(height, s)) < 2 * p.poly_n) break;
    ++levels;
  }
  return levels;
}

Quadratic sample(const PolyExpansion& e, float fx, float fy) {
  fx = std::clamp(fx, 0.f, static_cast<float>(e.width - 1));
  fy = std::clamp(fy, 0.f, static_cast<float>(e.height - 1));
  const int x0 = std::min(static_cast<int>(fx), e.width - 1), y0 = std::min(static_cast<int>(fy), e.height - 1);
  const int x1 = std::min(x0 + 1, e.width - 1), y1 = std::min(y0 + 1, e.height - 1);
  const float ax = fx - x0, ay = fy - y0;
  const float w00 = (1 - ax) * (1 - ay), w10 = ax * (1 - ay), w01 = (1 - ax) * ay, w11 = ax * ay;
  const Quadratic &q00 = e.at(x0, y0), &q10 = e.at(x1, y0), &q01 = e.at(x0, y1), &q11 = e.at(x1, y1);
  auto mix = [&](float Quadratic::*f) { return w00 * q00.*f + w10 * q10.*f + w01 * q01.*f + w11 * q11.*f; };
  return {mix(&Quadratic::axx), mix(&Quadratic::axy), mix(&Quadratic::ayy), mix(&Quadratic::bx), mix(&Quadratic::by), 0.f};
}

void refine(const PolyExpansion& r0, const PolyExpansion& r1, FlowField& flow, const std::vector<float>& window) {
  const int w = r0.width, h = r0.height;
  RealImage g11(w, h), g12(w, h), g22(w, h), h1(w, h), h2(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = flow.index(x, y);
      const float dx = flow.u[i], dy = flow.v[i];
      const Quadratic& a = r0.at(x, y);
      const Quadratic b = sample(r1, x + dx, y + dy);
      const float axx = 0.5f * (a.axx + b.axx), axy = 0.5f * (a.axy + b.axy), ayy = 0.5f * (a.ayy + b.ayy);
      // delta_b = -(b1 - b0)/2 + A * prior
      const float dbx = -0.5f * (b.bx - a.bx) + axx * dx + axy * dy;
      const float dby = -0.5f * (b.by - a.by) + axy * dx + ayy * dy;
      // Normal equations A^T A d = A^T delta_b (A symmetric).
      g11.data[i] = axx * axx + axy * axy;
      g12.data[i] = axy * (axx + ayy);
      g22.data[i] = axy * axy + ayy * ayy;
      h1.data[i] = axx * dbx + axy * dby;
      h2.data[i] = axy * dbx + ayy * dby;
    }
  }
  g11 = separable_filter(g11, window);
  g12 = separable_filter(g12, window);
  g22 = separable_filter(g22, window);
  h1 = separable_filter(h1, window);
  h2 = separable_filter(h2, window);
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    const double a11 = g11.data[i], a12 = g12.data[i], a22 = g22.data[i];
    const double lambda = 1e-3 * (a11 + a22);
    const double det = (a11 + lambda) * (a22 + lambda) - a12 * a12;
    if (!(det > 1e-30) || !std::isfinite(det)) {
      flow.u[i] = flow.v[i] = 0.f;
      continue;
    }
    flow.u[i] = static_cast<float>(((a22 + lambda) * h1.data[i] - a12 * h2.data[i]) / det);
    flow.v[i] = static_cast<float>(((a11 + lambda) * h2.data[i] - a12 * h1.data[i]) / det);
  }
}

FlowField upscale_flow(const FlowField& coarse, int w, int h, double scale) {
  RealImage cu(coarse.width, coarse.height), cv(coarse.width, coarse.height);
  cu.data = coarse.u, cv.data = coarse.v;
  const RealImage fu = resize_bilinear(cu, w, h, 1.0 / scale), fv = resize_bilinear(cv, w, h, 1.0 / scale);
  FlowField out(w, h);
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    out.u[i] = static_cast<float>(fu.data[i] / scale);
    out.v[i] = static_cast<float>(fv.data[i] / scale);
  }
  return out;
}

}  // namespace

FlowField farneback_flow(const LumaFrame& prev, const LumaFrame& curr, const FarnebackParams& params) {
  params.validate();
  if (!prev.same_shape(curr)) fail(ErrorCode::kDimensionMismatch, "flow inputs differ in size");
  if (prev.width < params.poly_n || prev.height < params.poly_n)
    fail(ErrorCode::kInvalidArgument, "frames smaller than the expansion window");

  const RealImage p = convert<RealImage>(prev), c = convert<RealImage>(curr);
  const int levels = usable_levels(prev.width, prev.height, params);
  const std::vector<float> window = gaussian_kernel(params.window_sigma);

  FlowField flow;
  for (int level = levels - 1; level >= 0; --level) {
    const RealImage i0 = pyramid_level(p, level, params.pyramid_scale);
    const RealImage i1 = pyramid_level(c, level, params.pyramid_scale);
    flow = flow.u.empty() ? FlowField(i0.width, i0.height) : upscale_flow(flow, i0.width, i0.height, params.pyramid_scale);
    const PolyExpansion r0 = poly_expansion(i0, params.poly_n, params.poly_sigma);
    const PolyExpansion r1 = poly_expansion(i1, params.poly_n, params.poly_sigma);
    for (int it = 0; it < params.iterations; ++it) refine(r0, r1, flow, window);
  }
  return flow;
}

// ---------------------------------------------------------------------------
// Block matching

long long block_sad(const LumaFrame& prev, const LumaFrame& curr, int bx, int by, int bw, int bh, int dx, int dy) {
  long long sad = 0;
  for (int y = by; y < by + bh; ++y)
    for (int x = bx; x < bx + bw; ++x) sad += std::abs(int(prev.at(x, y)) - int(curr.clamped(x + dx, y + dy)));
  return sad;
}

FlowField block_match_flow(const LumaFrame& prev, const LumaFrame& curr, int block, int search_radius) {
  BlockMatchParams{block, search_radius}.validate();
  if (!prev.same_shape(curr)) fail(ErrorCode::kDimensionMismatch, "flow inputs differ in size");
  FlowField flow(prev.width, prev.height);
  for (int by = 0; by < prev.height; by += block) {
    for (int bx = 0; bx < prev.width; bx += block) {
      const int bw = std::min(block, prev.width - bx), bh = std::min(block, prev.height - by);
      auto best = std::make_tuple(std::numeric_limits<long long>::max(), 0, 0, 0);  // sad, |d|^2, dy, dx
      for (int dy = -search_radius; dy <= search_radius; ++dy)
        for (int dx = -search_radius; dx <= search_radius; ++dx) {
          const auto key = std::make_tuple(block_sad(prev, curr, bx, by, bw, bh, dx, dy), dx * dx + dy * dy, dy, dx);
          if (key < best) best = key;
        }
      const auto [sad, norm, dy, dx] = best;
      for (int y = by; y < by + bh; ++y)
        for (int x = bx; x < bx + bw; ++x) {
          flow.u[flow.index(x, y)] = static_cast<float>(dx);
          flow.v[flow.index(x, y)] = static_cast<float>(dy);
        }
    }
  }
  return flow;
}

// ---------------------------------------------------------------------------
// External process

namespace {

class ProcessSlots {
 public:
  void acquire(int limit) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return active_ < limit; });
    ++active_;
  }
  void release() {
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int active_ = 0;
};

ProcessSlots& process_slots() {
  static ProcessSlots slots;
  return slots;
}

class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("neuroflow-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) out += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
  return out + "'";
}

void replace_all(std::string& text, const std::string& key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
    text.replace(pos, key.size(), value);
}

}  // namespace

FlowField external_flow(const LumaFrame& prev, const LumaFrame& curr, const ExternalParams& params) {
  params.validate();
  if (!prev.same_shape(curr)) fail(ErrorCode::kDimensionMismatch, "flow inputs differ in size");

  ScratchDir scratch;
  const fs::path prev_path = scratch.path() / "prev.pgm", curr_path = scratch.path() / "curr.pgm",
                 out_path = scratch.path() / "out.flo";
  write_pgm(prev, prev_path);
  write_pgm(curr, curr_path);

  std::string command = params.command;
  replace_all(command, "{prev}", shell_quote(prev_path.string()));
  replace_all(command, "{curr}", shell_quote(curr_path.string()));
  replace_all(command, "{out}", shell_quote(out_path.string()));

  process_slots().acquire(params.max_concurrent);
  const int status = std::system(command.c_str());
  process_slots().release();

  if (status == -1) fail(ErrorCode::kBackendFailure, "could not launch external flow command");
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    fail(ErrorCode::kBackendFailure, "external flow command exited with status " +
                                         std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  FlowField field;
  try {
    field = read_flo(out_path);
  } catch (const Error& e) {
    fail(ErrorCode::kBackendFailure, std::string("external flow output unusable: ") + e.what());
  }
  if (field.width != prev.width || field.height != prev.height)
    fail(ErrorCode::kDimensionMismatch, "external flow is " + std::to_string(field.width) + "x" +
                                            std::to_string(field.height) + ", expected " +
                                            std::to_string(prev.width) + "x" + std::to_string(prev.height));
  return field;
}

// ---------------------------------------------------------------------------
// Dispatch and gating

FlowField compute_flow(const LumaFrame& prev, const LumaFrame& curr, const FlowBackendSpec& backend) {
  struct Visitor {
    const LumaFrame& prev;
    const LumaFrame& curr;
    FlowField operator()(const FarnebackParams& p) const { return farneback_flow(prev, curr, p); }
    FlowField operator()(const BlockMatchParams& p) const { return block_match_flow(prev, curr, p.block, p.search_radius); }
    FlowField operator()(const ExternalParams& p) const { return external_flow(prev, curr, p); }
  };
  return std::visit(Visitor{prev, curr}, backend);
}

int backend_padding(const FlowBackendSpec& backend) {
  struct Visitor {
    int operator()(const FarnebackParams& p) const {
      const int base = static_cast<int>(std::ceil(3.0 * p.window_sigma)) + p.poly_n / 2;
      return static_cast<int>(std::ceil(base * std::pow(1.0 / p.pyramid_scale, p.pyramid_levels - 1)));
    }
    int operator()(const BlockMatchParams& p) const { return p.block + p.search_radius; }
    int operator()(const ExternalParams& p) const { return p.padding; }
  };
  return std::visit(Visitor{}, backend);
}

int backend_alignment(const FlowBackendSpec& backend) {
  struct Visitor {
    int operator()(const FarnebackParams& p) const {
      const double factor = std::pow(1.0 / p.pyramid_scale, p.pyramid_levels - 1);
      const double rounded = std::round(factor);
      return std::abs(factor - rounded) < 1e-9 ? static_cast<int>(rounded) : 1;
    }
    int operator()(const BlockMatchParams& p) const { return p.block; }
    int operator()(const ExternalParams&) const { return 1; }
  };
  return std::visit(Visitor{}, backend);
}

FlowField gated_flow(const LumaFrame& prev, const LumaFrame& curr, const RoiSet& rois, const FlowBackendSpec& backend) {
  if (!prev.same_shape(curr)) fail(ErrorCode::kDimensionMismatch, "flow inputs differ in size");
  const int w = prev.width, h = prev.height;
  const int pad = backend_padding(backend), align = backend_alignment(backend);
  FlowField out(w, h);
  for (std::size_t i = 0; i < rois.size(); ++i) {
    const RoiRect& roi = rois[i];
    if (roi.empty() || !RoiRect{0, 0, w, h}.contains(roi))
      fail(ErrorCode::kInvalidArgument, "roi " + std::to_string(i) + " lies outside the frame");
    const int x0 = std::max(0, roi.x - pad) / align * align, y0 = std::max(0, roi.y - pad) / align * align;
    const int x1 = std::min(w, roi.right() + pad), y1 = std::min(h, roi.bottom() + pad);
    FlowField local;
    try {
      local = compute_flow(crop(prev, x0, y0, x1 - x0, y1 - y0), crop(curr, x0, y0, x1 - x0, y1 - y0), backend);
    } catch (const Error& e) {
      throw Error(e.code(), "roi " + std::to_string(i) + ": " + e.what());
    }
    for (int y = roi.y; y < roi.bottom(); ++y)
      for (int x = roi.x; x < roi.right(); ++x) {
        out.u[out.index(x, y)] = local.u[local.index(x - x0, y - y0)];
        out.v[out.index(x, y)] = local.v[local.index(x - x0, y - y0)];
      }
  }
  return out;
}

}  // namespace neuroflow
