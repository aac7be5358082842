#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "neuroflow/flow.hpp"
#include "neuroflow/frame_io.hpp"
#include "support.hpp"

using namespace neuroflow;
using doctest::Approx;
using testing::error_of;

namespace {

// Smooth random texture on a torus so that circular shifts are exact.
LumaFrame periodic_texture(int w, int h, std::uint32_t seed, double sigma = 2.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> raw(static_cast<std::size_t>(w) * h);
  for (auto& v : raw) v = u(rng);
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * r + 1);
  for (int i = -r; i <= r; ++i) k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  auto wrap = [](int a, int n) { return ((a % n) + n) % n; };
  std::vector<double> tmp(raw.size()), out(raw.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * raw[static_cast<std::size_t>(y) * w + wrap(x + i, w)];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp[static_cast<std::size_t>(wrap(y + i, h)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  LumaFrame f(w, h);
  for (std::size_t i = 0; i < out.size(); ++i)
    f.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * (out[i] - *lo) / (*hi - *lo)));
  return f;
}

// curr(x + d) = prev(x).
LumaFrame shifted(const LumaFrame& f, int dx, int dy) {
  LumaFrame out(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      out.at(x, y) = f.at(((x - dx) % f.width + f.width) % f.width, ((y - dy) % f.height + f.height) % f.height);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Median over a centred window that stays clear of the frame border.
std::pair<double, double> interior_median(const FlowField& f, int margin) {
  std::vector<double> u, v;
  for (int y = margin; y < f.height - margin; ++y)
    for (int x = margin; x < f.width - margin; ++x) {
      u.push_back(f.u[f.index(x, y)]);
      v.push_back(f.v[f.index(x, y)]);
    }
  return {median(u), median(v)};
}

// Weighted least squares over the window with a plain 6x6 normal system.
std::array<double, 6> brute_fit(const RealImage& img, int px, int py, int n, double sigma) {
  const int r = n / 2;
  std::vector<double> g(n);
  double gs = 0;
  for (int i = -r; i <= r; ++i) gs += g[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  double M[6][7] = {};
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) {
      const double w = g[i + r] * g[j + r] / (gs * gs);
      const double basis[6] = {1.0, double(i), double(j), double(i * i), double(j * j), double(i * j)};
      const double f = img.clamped(px + i, py + j);
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) M[a][b] += w * basis[a] * basis[b];
        M[a][6] += w * basis[a] * f;
      }
    }
  for (int c = 0; c < 6; ++c) {
    int piv = c;
    for (int rr = c + 1; rr < 6; ++rr)
      if (std::abs(M[rr][c]) > std::abs(M[piv][c])) piv = rr;
    for (int k = 0; k < 7; ++k) std::swap(M[c][k], M[piv][k]);
    for (int rr = 0; rr < 6; ++rr) {
      if (rr == c) continue;
      const double f = M[rr][c] / M[c][c];
      for (int k = 0; k < 7; ++k) M[rr][k] -= f * M[c][k];
    }
  }
  std::array<double, 6> x{};
  for (int a = 0; a < 6; ++a) x[a] = M[a][6] / M[a][a];
  return x;  // c, bx, by, axx, ayy, 2*axy
}

}  // namespace

TEST_CASE("poly_expansion on exact polynomials") {
  const RealImage flat(20, 20, 42.f);
  const PolyExpansion pc = poly_expansion(flat, 7, 1.5);
  const Quadratic& q = pc.at(10, 10);
  CHECK(q.c == Approx(42.0).epsilon(1e-5));
  CHECK(std::abs(q.axx) < 1e-4);
  CHECK(std::abs(q.bx) < 1e-4);

  RealImage ramp(20, 20), para(20, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      ramp.at(x, y) = 2.f * x;
      para.at(x, y) = static_cast<float>(x * x);
    }
  const Quadratic& r = poly_expansion(ramp, 7, 1.5).at(10, 10);
  CHECK(r.bx == Approx(2.0).epsilon(1e-5));
  CHECK(std::abs(r.by) < 1e-4);
  CHECK(std::abs(r.axx) < 1e-4);
  CHECK(std::abs(r.axy) < 1e-4);
  const Quadratic& s = poly_expansion(para, 7, 1.5).at(10, 10);
  CHECK(s.axx == Approx(1.0).epsilon(1e-5));
  CHECK(s.bx == Approx(20.0).epsilon(1e-5));
  CHECK(std::abs(s.ayy) < 1e-4);
}

TEST_CASE("poly_expansion matches a brute-force least-squares fit") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> u(0.f, 255.f);
  RealImage img(17, 15);
  for (auto& v : img.data) v = u(rng);
  for (auto [n, sigma] : {std::pair{5, 1.1}, std::pair{7, 1.5}}) {
    const PolyExpansion e = poly_expansion(img, n, sigma);
    for (auto [x, y] : {std::pair{8, 7}, std::pair{0, 0}, std::pair{16, 3}}) {
      const auto ref = brute_fit(img, x, y, n, sigma);
      const Quadratic& q = e.at(x, y);
      CHECK(q.c == Approx(ref[0]).epsilon(1e-4));
      CHECK(q.bx == Approx(ref[1]).epsilon(1e-4));
      CHECK(q.by == Approx(ref[2]).epsilon(1e-4));
      CHECK(q.axx == Approx(ref[3]).epsilon(1e-4));
      CHECK(q.ayy == Approx(ref[4]).epsilon(1e-4));
      CHECK(q.axy == Approx(ref[5] / 2).epsilon(1e-4));
    }
  }
  CHECK(error_of([&] { poly_expansion(RealImage(4, 4), 5, 1.0); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([&] { poly_expansion(img, 4, 1.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("farneback_flow on identical frames is zero") {
  const LumaFrame f = periodic_texture(96, 80, 1);
  const FlowField flow = farneback_flow(f, f);
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    CHECK(std::abs(flow.u[i]) < 0.05f);
    CHECK(std::abs(flow.v[i]) < 0.05f);
  }
}

TEST_CASE("farneback_flow recovers integer shifts") {
  const LumaFrame f = periodic_texture(128, 96, 2);
  for (auto [dx, dy] : {std::pair{3, 0}, std::pair{-2, 1}, std::pair{1, -3}}) {
    const FlowField flow = farneback_flow(f, shifted(f, dx, dy));
    const auto [mu, mv] = interior_median(flow, 16);
    CHECK(std::abs(mu - dx) <= 0.5);
    CHECK(std::abs(mv - dy) <= 0.5);
    for (float x : flow.u) REQUIRE(std::isfinite(x));
    // Swapping the pair negates the field.
    const FlowField back = farneback_flow(shifted(f, dx, dy), f);
    std::vector<double> sum;
    for (std::size_t i = 0; i < back.u.size(); ++i) sum.push_back(std::abs(back.u[i] + flow.u[i]));
    CHECK(median(sum) < 0.3);
  }
}

TEST_CASE("farneback_flow rejects bad inputs") {
  CHECK(error_of([] { farneback_flow(LumaFrame(20, 20), LumaFrame(20, 21)); }) == ErrorCode::kDimensionMismatch);
  CHECK(error_of([] { farneback_flow(LumaFrame(5, 5), LumaFrame(5, 5)); }) == ErrorCode::kInvalidArgument);
  FarnebackParams bad;
  bad.pyramid_scale = 1.0;
  CHECK(error_of([&] { farneback_flow(LumaFrame(20, 20), LumaFrame(20, 20), bad); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("block_match_flow basics") {
  const LumaFrame f = periodic_texture(64, 48, 3, 1.0);
  const FlowField zero = block_match_flow(f, f, 8, 4);
  for (std::size_t i = 0; i < zero.u.size(); ++i) CHECK((zero.u[i] == 0.f && zero.v[i] == 0.f));
  const FlowField flat = block_match_flow(LumaFrame(32, 32, 9), LumaFrame(32, 32, 9), 8, 3);
  for (std::size_t i = 0; i < flat.u.size(); ++i) CHECK((flat.u[i] == 0.f && flat.v[i] == 0.f));

  const FlowField s = block_match_flow(f, shifted(f, 2, 0), 8, 4);
  for (int y = 8; y < 40; ++y)
    for (int x = 8; x < 56; ++x) {
      CHECK(s.u[s.index(x, y)] == 2.f);
      CHECK(s.v[s.index(x, y)] == 0.f);
    }
}

TEST_CASE("block_match_flow is an exhaustive minimiser") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const LumaFrame prev = testing::random_frame(16, 16, rng);
    LumaFrame curr = trial % 2 ? shifted(prev, 1, -2) : testing::random_frame(16, 16, rng);
    if (trial % 3 == 0)
      for (auto& p : curr.data) p = static_cast<std::uint8_t>(p / 64 * 64);  // coarse values force ties
    const int block = 4 + trial % 3, radius = 2 + trial % 2;
    const FlowField flow = block_match_flow(prev, curr, block, radius);
    for (int by = 0; by < 16; by += block)
      for (int bx = 0; bx < 16; bx += block) {
        const int bw = std::min(block, 16 - bx), bh = std::min(block, 16 - by);
        const int dx = static_cast<int>(flow.u[flow.index(bx, by)]), dy = static_cast<int>(flow.v[flow.index(bx, by)]);
        const long long got = block_sad(prev, curr, bx, by, bw, bh, dx, dy);
        for (int ey = -radius; ey <= radius; ++ey)
          for (int ex = -radius; ex <= radius; ++ex) {
            const long long other = block_sad(prev, curr, bx, by, bw, bh, ex, ey);
            CHECK(other >= got);
            if (other == got) {
              const int n_got = dx * dx + dy * dy, n_other = ex * ex + ey * ey;
              CHECK((n_got < n_other || (n_got == n_other && std::pair{dy, dx} <= std::pair{ey, ex})));
            }
          }
        for (int y = by; y < by + bh; ++y)
          for (int x = bx; x < bx + bw; ++x) {
            CHECK(flow.u[flow.index(x, y)] == dx);
            CHECK(flow.v[flow.index(x, y)] == dy);
          }
      }
  }
}

TEST_CASE("external backend protocol") {
  testing::TempDir dir("ext");
  FlowField fixture(12, 10);
  std::mt19937 rng(1);
  std::normal_distribution<float> n(0.f, 3.f);
  for (auto& x : fixture.u) x = n(rng);
  for (auto& x : fixture.v) x = n(rng);
  write_flo(fixture, dir / "fixture.flo");
  write_flo(FlowField(5, 5), dir / "small.flo");
  const LumaFrame a(12, 10, 1), b(12, 10, 2);
  const std::string fx = (dir / "fixture.flo").string(), small = (dir / "small.flo").string();

  ExternalParams p;
  p.command = "test -s {prev} && test -s {curr} && cp '" + fx + "' {out}";
  CHECK(external_flow(a, b, p) == fixture);
  CHECK(compute_flow(a, b, p) == fixture);

  p.command = "true {prev} {curr} {out}; exit 1";
  CHECK(error_of([&] { external_flow(a, b, p); }) == ErrorCode::kBackendFailure);
  p.command = "true {prev} {curr} {out}";
  CHECK(error_of([&] { external_flow(a, b, p); }) == ErrorCode::kBackendFailure);
  p.command = "true {prev} {curr}; echo junk > {out}";
  CHECK(error_of([&] { external_flow(a, b, p); }) == ErrorCode::kBackendFailure);
  p.command = "cp '" + small + "' {out} # {prev} {curr}";
  CHECK(error_of([&] { external_flow(a, b, p); }) == ErrorCode::kDimensionMismatch);
  p.command = "cp '" + fx + "' {out}";
  CHECK(error_of([&] { external_flow(a, b, p); }) == ErrorCode::kConfig);
}

TEST_CASE("backend padding and alignment") {
  CHECK(backend_padding(FarnebackParams{}) == (23 + 3) * 4);
  CHECK(backend_alignment(FarnebackParams{}) == 4);
  CHECK(backend_padding(BlockMatchParams{8, 4}) == 12);
  CHECK(backend_alignment(BlockMatchParams{8, 4}) == 8);
  CHECK(backend_name(BlockMatchParams{}) == "blockmatch");
}

TEST_CASE("gated_flow") {
  const LumaFrame f = periodic_texture(160, 120, 4);
  LumaFrame g = f;
  // Shift a patch by (2,1); the rest of the frame is static.
  for (int y = 40; y < 80; ++y)
    for (int x = 60; x < 100; ++x) g.at(x, y) = f.at(x - 2, y - 1);
  const FarnebackParams fp;
  const FlowField dense = farneback_flow(f, g, fp);

  const FlowField none = gated_flow(f, g, {}, fp);
  for (std::size_t i = 0; i < none.u.size(); ++i) CHECK((none.u[i] == 0.f && none.v[i] == 0.f));

  CHECK(gated_flow(f, g, {{0, 0, 160, 120}}, fp) == dense);

  const RoiRect roi{52, 32, 56, 56};
  const FlowField gated = gated_flow(f, g, {roi}, fp);
  std::vector<double> diff;
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x) {
      const std::size_t i = gated.index(x, y);
      if (roi.contains(x, y)) {
        diff.push_back(std::abs(gated.u[i] - dense.u[i]));
        diff.push_back(std::abs(gated.v[i] - dense.v[i]));
      } else {
        CHECK((gated.u[i] == 0.f && gated.v[i] == 0.f));
      }
    }
  CHECK(median(diff) <= 0.1);

  // Block matching is local, so gating is exact inside the roi.
  const BlockMatchParams bp{8, 3};
  const FlowField bm = block_match_flow(f, g, 8, 3);
  const FlowField bg = gated_flow(f, g, {{48, 32, 64, 48}}, bp);
  for (int y = 32; y < 80; ++y)
    for (int x = 48; x < 112; ++x) CHECK(bg.u[bg.index(x, y)] == bm.u[bm.index(x, y)]);

  CHECK(error_of([&] { gated_flow(f, g, {{150, 0, 20, 10}}, fp); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("gated_flow overlap goes to the later roi") {
  // The stub reports the crop width as u, so each roi leaves a distinct value.
  ExternalParams p;
  p.command = std::string("'") + FLOW_STUB_PATH + "' {prev} {curr} {out}";
  p.padding = 0;
  const LumaFrame a(40, 40, 3);
  const RoiRect small{0, 0, 10, 10}, big{5, 5, 20, 20};
  const FlowField ab = gated_flow(a, a, {small, big}, p);
  const FlowField ba = gated_flow(a, a, {big, small}, p);
  CHECK(ab.u[ab.index(7, 7)] == 20.f);
  CHECK(ba.u[ba.index(7, 7)] == 10.f);
  CHECK(ab.u[ab.index(2, 2)] == 10.f);
  CHECK(ab.v[ab.index(20, 20)] == 20.f);
  CHECK(ab.u[ab.index(30, 30)] == 0.f);
}

TEST_CASE("gated_flow attaches the roi index to backend errors") {
  const LumaFrame a(40, 40, 3);
  ExternalParams p;
  p.command = "true {prev} {curr} {out}; exit 3";
  try {
    gated_flow(a, a, {{0, 0, 10, 10}, {20, 20, 10, 10}}, p);
    FAIL("expected a backend failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBackendFailure);
    CHECK(std::string(e.what()).rfind("roi 0: ", 0) == 0);
  }
}
