#include <cmath>
#include <random>

#include "doctest.h"
#include "neuroflow/prefilter.hpp"
#include "support.hpp"

using namespace neuroflow;
using doctest::Approx;
using testing::error_of;

namespace {

BinaryImage filled(int w, int h, const std::vector<RoiRect>& rects) {
  BinaryImage b(w, h, 0);
  for (const auto& r : rects)
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x = r.x; x < r.right(); ++x) b.at(x, y) = 1;
  return b;
}

// Direct 2D convolution with clamped borders, the reference for the separable path.
RealImage blur_reference(const RealImage& img, double sigma) {
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= sum;
  RealImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0;
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i) acc += k[i + r] * k[j + r] * img.clamped(x + i, y + j);
      out.at(x, y) = static_cast<float>(acc);
    }
  return out;
}

}  // namespace

TEST_CASE("gaussian_kernel shape") {
  const auto k = gaussian_kernel(1.0);
  CHECK(k.size() == 7);
  double sum = 0;
  for (float v : k) sum += v;
  CHECK(sum == Approx(1.0).epsilon(1e-6));
  CHECK(gaussian_kernel(1.2).size() == 9);
  CHECK(error_of([] { gaussian_kernel(0.0); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([] { gaussian_kernel(-1.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("gaussian_blur on constants, impulses and random images") {
  const RealImage c = gaussian_blur(RealImage(9, 7, 3.5f), 1.3);
  for (float v : c.data) CHECK(v == Approx(3.5).epsilon(1e-6));

  RealImage impulse(21, 21, 0.f);
  impulse.at(10, 10) = 1.f;
  const RealImage b = gaussian_blur(impulse, 1.0);
  double norm = 0;
  for (int i = -3; i <= 3; ++i) norm += std::exp(-0.5 * i * i);
  CHECK(b.at(10, 10) == Approx(1.0 / (norm * norm)).epsilon(1e-6));
  double mass = 0;
  for (float v : b.data) mass += v;
  CHECK(mass == Approx(1.0).epsilon(1e-5));

  std::mt19937 rng(2);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  RealImage img(13, 9);
  for (auto& v : img.data) v = u(rng);
  const RealImage fast = gaussian_blur(img, 1.5), ref = blur_reference(img, 1.5);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(fast.data[i] == Approx(ref.data[i]).epsilon(1e-5));
}

TEST_CASE("sobel_gradients") {
  const Gradients z = sobel_gradients(RealImage(5, 5, 9.f));
  for (float v : z.gx.data) CHECK(v == 0.f);
  for (float v : z.gy.data) CHECK(v == 0.f);

  RealImage step(8, 5, 0.f);
  for (int y = 0; y < 5; ++y)
    for (int x = 4; x < 8; ++x) step.at(x, y) = 255.f;
  const Gradients g = sobel_gradients(step);
  CHECK(std::abs(g.gx.at(3, 2)) == 1020.f);
  CHECK(std::abs(g.gx.at(4, 2)) == 1020.f);
  CHECK(g.gy.at(3, 2) == 0.f);

  std::mt19937 rng(4);
  RealImage img(6, 5), t(5, 6);
  for (auto& v : img.data) v = static_cast<float>(rng() % 100);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) t.at(y, x) = img.at(x, y);
  const Gradients a = sobel_gradients(img), b = sobel_gradients(t);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) {
      CHECK(a.gx.at(x, y) == b.gy.at(y, x));
      CHECK(a.gy.at(x, y) == b.gx.at(y, x));
    }
  CHECK(error_of([] { sobel_gradients(RealImage(2, 5)); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("edge_thin_binarize") {
  const RealImage zero(6, 6, 0.f);
  for (auto b : edge_thin_binarize(zero, zero, 0.1).data) CHECK(b == 0);

  // Ramp edge: the response peaks on one column and NMS keeps just that column.
  RealImage ramp(9, 5, 0.f);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 9; ++x) ramp.at(x, y) = static_cast<float>(std::clamp(x - 3, 0, 2)) * 0.5f;
  const Gradients g = sobel_gradients(ramp);
  const BinaryImage e = edge_thin_binarize(g.gx, g.gy, 0.5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 9; ++x) CHECK(e.at(x, y) == (x == 4 ? 1 : 0));

  const BinaryImage none = edge_thin_binarize(g.gx, g.gy, 100.0);
  for (auto b : none.data) CHECK(b == 0);
}

TEST_CASE("find_contours traces a 3x3 square counterclockwise") {
  CHECK(find_contours(BinaryImage(5, 5, 0)).empty());
  const BinaryImage sq = filled(5, 5, {{1, 1, 3, 3}});
  const auto cs = find_contours(sq);
  REQUIRE(cs.size() == 1);
  const Contour expect{{1, 1}, {1, 2}, {1, 3}, {2, 3}, {3, 3}, {3, 2}, {3, 1}, {2, 1}};
  CHECK(cs[0] == expect);

  const auto two = find_contours(filled(12, 6, {{1, 1, 3, 3}, {7, 2, 4, 3}}));
  REQUIRE(two.size() == 2);
  CHECK(bounding_rect(two[0]) == RoiRect{1, 1, 3, 3});
  CHECK(bounding_rect(two[1]) == RoiRect{7, 2, 4, 3});

  BinaryImage dot(3, 3, 0);
  dot.at(1, 1) = 1;
  const auto single = find_contours(dot);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == Contour{{1, 1}});
}

TEST_CASE("contours enclose their component") {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    BinaryImage b(12, 10);
    for (auto& v : b.data) v = (rng() % 3 == 0) ? 1 : 0;
    Image<int> labels;
    const int n = label_components(b, labels);
    const auto cs = find_contours(b);
    REQUIRE(static_cast<int>(cs.size()) == n);
    for (int k = 0; k < n; ++k) {
      RoiRect tight;
      for (int y = 0; y < b.height; ++y)
        for (int x = 0; x < b.width; ++x)
          if (labels.at(x, y) == k + 1) tight = bounding_union(tight, RoiRect{x, y, 1, 1});
      CHECK(bounding_rect(cs[static_cast<std::size_t>(k)]) == tight);
      for (const auto& p : cs[static_cast<std::size_t>(k)]) CHECK(labels.at(p.x, p.y) == k + 1);
    }
  }
}

TEST_CASE("rois_from_contours") {
  const Contour square{{2, 2}, {2, 5}, {5, 5}, {5, 2}};
  PrefilterParams p;
  p.expand = 0.0;
  CHECK(rois_from_contours({square}, p, 20, 20) == RoiSet{{2, 2, 4, 4}});
  p.expand = 0.25;
  CHECK(rois_from_contours({square}, p, 20, 20) == RoiSet{{1, 1, 6, 6}});
  CHECK(rois_from_contours({square}, p, 5, 5) == RoiSet{{1, 1, 4, 4}});

  // Overlap 8x10 over a 16x10 union.
  const RoiSet pair{{0, 0, 12, 10}, {4, 0, 12, 10}};
  CHECK(rect_iou(pair[0], pair[1]) == Approx(0.5));
  CHECK(merge_overlapping(pair, 0.3) == RoiSet{{0, 0, 16, 10}});
  CHECK(merge_overlapping(pair, 0.6) == pair);
}

TEST_CASE("merge_overlapping reaches a fixed point") {
  std::mt19937 rng(12);
  std::uniform_int_distribution<int> pos(0, 40), size(1, 15);
  for (int trial = 0; trial < 300; ++trial) {
    RoiSet rois;
    for (int i = 0; i < 8; ++i) rois.push_back({pos(rng), pos(rng), size(rng), size(rng)});
    const RoiSet merged = merge_overlapping(rois, 0.3);
    for (std::size_t i = 0; i < merged.size(); ++i)
      for (std::size_t j = i + 1; j < merged.size(); ++j) CHECK(rect_iou(merged[i], merged[j]) < 0.3);
    for (const auto& r : rois)
      CHECK(std::any_of(merged.begin(), merged.end(), [&](const RoiRect& m) { return m.contains(r); }));
  }
}

TEST_CASE("pattern_to_rois") {
  const BinConfig bin;
  CHECK(pattern_to_rois(MotionPattern(96, 45, 0), bin, 1920, 900).empty());
  CHECK(error_of([&] { pattern_to_rois(MotionPattern(96, 45), bin, 1920, 880); }) == ErrorCode::kDimensionMismatch);

  const MotionPattern one = filled(96, 45, {{40, 20, 4, 4}});
  const RoiSet r = pattern_to_rois(one, bin, 1920, 900);
  REQUIRE(r.size() == 1);
  CHECK(r[0].contains(RoiRect{800, 400, 80, 80}));
  for (const auto& roi : r) CHECK(clamp_to(roi, 1920, 900) == roi);

  const MotionPattern two = filled(96, 45, {{10, 10, 3, 3}, {70, 30, 4, 3}});
  const RoiSet r2 = pattern_to_rois(two, bin, 1920, 900);
  REQUIRE(r2.size() == 2);
}

TEST_CASE("pattern_to_rois covers every active blob") {
  std::mt19937 rng(31);
  std::uniform_int_distribution<int> px(0, 88), py(0, 38), sz(2, 6);
  const BinConfig bin;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RoiRect> blobs;
    for (int i = 0; i < 3; ++i) blobs.push_back({px(rng), py(rng), sz(rng), sz(rng)});
    const MotionPattern pat = filled(96, 45, blobs);
    const RoiSet rois = pattern_to_rois(pat, bin, 1920, 900);
    for (int y = 0; y < 45; ++y)
      for (int x = 0; x < 96; ++x) {
        if (!pat.at(x, y)) continue;
        const RoiRect cell{x * 20, y * 20, 20, 20};
        CHECK(std::any_of(rois.begin(), rois.end(), [&](const RoiRect& r) { return r.contains(cell); }));
      }
    for (const auto& r : rois) {
      CHECK(r.area() > 0);
      CHECK(clamp_to(r, 1920, 900) == r);
    }
  }
}

TEST_CASE("larger expansion never shrinks a roi") {
  std::mt19937 rng(6);
  std::uniform_int_distribution<int> pos(0, 30), size(1, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const RoiRect r{pos(rng), pos(rng), size(rng), size(rng)};
    RoiRect prev = expand_rect(r, 0.0, 40, 40);
    for (double e = 0.05; e < 1.0; e += 0.05) {
      const RoiRect next = expand_rect(r, e, 40, 40);
      CHECK(next.contains(prev));
      prev = next;
    }
  }
}
