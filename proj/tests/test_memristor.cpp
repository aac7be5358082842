#include <cmath>
#include <random>

#include "doctest.h"
#include "neuroflow/memristor.hpp"
#include "support.hpp"

using namespace neuroflow;
using doctest::Approx;
using testing::error_of;

TEST_CASE("apply_pulse update rule") {
  const MemristorParams p;
  for (double s : {0.0, 0.3, 1.0}) CHECK(apply_pulse(s, 0.0, p) == s);
  CHECK(apply_pulse(0.0, 0.3, p) == 1.0);
  MemristorParams q;
  q.pulse_width = 0.1;
  CHECK(apply_pulse(1.0, -0.3, q) == Approx(0.4));
  MemristorParams slow;
  slow.alpha_set = 1.0;
  CHECK(apply_pulse(0.2, 0.5, slow) == Approx(0.2 + 0.5 * 0.8));
  CHECK(error_of([&] { apply_pulse(0.5, std::nan(""), p); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([&] { apply_pulse(0.5, INFINITY, p); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("state stays in [0,1] under random drives") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> v(-2.0, 2.0), a(0.01, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    MemristorParams p;
    p.alpha_set = a(rng);
    p.alpha_reset = a(rng);
    double s = 0.5;
    for (int k = 0; k < 200; ++k) {
      s = apply_pulse(s, v(rng), p);
      REQUIRE(s >= 0.0);
      REQUIRE(s <= 1.0);
    }
  }
}

TEST_CASE("constant-polarity trains are monotone") {
  MemristorParams p;
  p.alpha_set = p.alpha_reset = 0.7;
  double s = 0.05;
  for (int k = 0; k < 50; ++k) {
    const double next = apply_pulse(s, 0.3, p);
    CHECK(next >= s);
    s = next;
  }
  for (int k = 0; k < 50; ++k) {
    const double next = apply_pulse(s, -0.3, p);
    CHECK(next <= s);
    s = next;
  }
}

TEST_CASE("device_current") {
  const MemristorParams p;
  for (double s : {0.0, 0.4, 1.0}) CHECK(device_current(s, 0.0, p) == 0.0);
  CHECK(device_current(1.0, 0.3, p) == Approx(p.g_on * 0.3));
  CHECK(device_current(0.5, 0.2, p) == Approx(1.01e-5));
}

TEST_CASE("read_pattern thresholds") {
  MemristorArray arr(2, 3);
  for (auto b : arr.read_pattern().data) CHECK(b == 0);
  arr.set_state(0, 0, 0.5);
  CHECK(arr.read_pattern().at(0, 0) == 1);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) arr.set_state(r, c, (r + c) % 2 ? 0.9 : 0.1);
  const MotionPattern p = arr.read_pattern();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) CHECK(p.at(c, r) == (r + c) % 2);
  CHECK(error_of([&] { arr.set_state(0, 0, 1.5); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("reset_frame_bound") {
  const MemristorParams p;
  CHECK(reset_frame_bound(1.0, -0.4, p) == 1);
  MemristorParams slow;
  slow.alpha_reset = 0.125;
  CHECK(reset_frame_bound(1.0, -0.4, slow) == static_cast<int>(std::ceil(std::log(2.0) / 0.05)));
  CHECK(reset_frame_bound(0.3, -0.4, slow) == 0);
}

TEST_CASE("discrete reset never outlasts the bound") {
  for (double alpha : {0.05, 0.125, 0.5, 1.0, 2.5, 20.0})
    for (double v : {-0.05, -0.2, -0.4}) {
      MemristorParams p;
      p.alpha_reset = alpha;
      int frames = 0;
      for (double s = 1.0; s >= p.read_threshold; ++frames) s = apply_pulse(s, v, p);
      CHECK(frames <= reset_frame_bound(1.0, v, p));
      CHECK(frames >= 1);
    }
}

namespace {

// 40x40 frame: cell (row 0, col 1) bright when `lit`.
LumaFrame frame_with(bool lit) {
  LumaFrame f(40, 40, 10);
  if (lit)
    for (int y = 0; y < 20; ++y)
      for (int x = 20; x < 40; ++x) f.at(x, y) = 250;
  return f;
}

}  // namespace

TEST_CASE("step_frame enter and leave") {
  const BinConfig bin;
  const ModulationConfig mod;
  for (double alpha_reset : {20.0, 0.125}) {
    MemristorParams p;
    p.alpha_reset = alpha_reset;
    MemristorArray arr(2, 2, p);
    for (int k = 0; k < 5; ++k) {
      const MotionPattern pat = arr.step_frame(frame_with(false), frame_with(false), bin, mod);
      for (auto b : pat.data) CHECK(b == 0);
    }
    const MotionPattern on = arr.step_frame(frame_with(false), frame_with(true), bin, mod);
    CHECK(on.at(1, 0) == 1);
    CHECK(on.at(0, 0) == 0);
    CHECK(on.at(0, 1) == 0);
    // Leaving is another large change, so the cell fires again.
    const double s_hi = arr.state(0, 1);
    const MotionPattern leave = arr.step_frame(frame_with(true), frame_with(false), bin, mod);
    CHECK(leave.at(1, 0) == 1);
    const int r = reset_frame_bound(arr.state(0, 1), modulate(0.0, mod), p);
    int off_after = 0;
    for (int k = 1; k <= r + 5; ++k) {
      if (!arr.step_frame(frame_with(false), frame_with(false), bin, mod).at(1, 0)) {
        off_after = k;
        break;
      }
    }
    CHECK(s_hi == Approx(1.0));
    CHECK(off_after >= 1);
    CHECK(off_after <= r);
  }
}

TEST_CASE("step_frame determinism and shape checks") {
  std::mt19937 rng(21);
  std::vector<LumaFrame> frames;
  for (int i = 0; i < 6; ++i) frames.push_back(testing::random_frame(60, 40, rng));
  auto run = [&] {
    MemristorParams p;
    p.alpha_reset = 0.3;
    MemristorArray arr(2, 3, p);
    std::vector<MotionPattern> out;
    for (std::size_t i = 1; i < frames.size(); ++i) out.push_back(arr.step_frame(frames[i - 1], frames[i], {}, {}));
    return out;
  };
  CHECK(run() == run());
  MemristorArray arr(2, 2);
  CHECK(error_of([&] { arr.step_frame(frames[0], frames[1], {}, {}); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("state dump and load") {
  testing::TempDir dir("mem");
  MemristorArray arr(2, 2);
  arr.set_state(0, 0, 0.0);
  arr.set_state(0, 1, 1.0);
  arr.set_state(1, 0, 0.5);
  arr.set_state(1, 1, 0.2);
  arr.dump(dir / "s.pgm");
  const MemristorArray back = MemristorArray::load(dir / "s.pgm");
  CHECK(back.state(0, 1) == 1.0);
  CHECK(back.state(1, 0) == Approx(128.0 / 255.0));
  CHECK(back.state(1, 1) == Approx(51.0 / 255.0));
}
