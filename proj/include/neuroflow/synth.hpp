#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "neuroflow/geometry.hpp"
#include "neuroflow/image.hpp"

namespace neuroflow {

/// Smooth seeded value noise: lattice values bilinearly blended with a
/// smoothstep, evaluated at real coordinates.
class ValueNoise {
 public:
  ValueNoise(std::uint64_t seed, double cell) : seed_(seed), cell_(cell) {}
  /// In [0,1].
  double operator()(double x, double y) const;

 private:
  double lattice(long long i, long long j) const;
  std::uint64_t seed_;
  double cell_;
};

struct TextureSpec {
  std::uint64_t seed = 1;
  double base = 128.0;      // mean intensity
  double amplitude = 30.0;  // +/- around base
  double cell = 8.0;        // noise lattice spacing, px
};

struct BackgroundSpec {
  TextureSpec texture{1, 60.0, 30.0, 8.0};
  double drift_x = 0.0;  // px/frame
  double drift_y = 0.0;
};

enum class SpriteShape { kRect, kDisk };

struct SpriteSpec {
  SpriteShape shape = SpriteShape::kRect;
  int w = 40;  // disk diameter when shape is kDisk
  int h = 40;
  double x0 = 0.0;  // top-left at frame 0
  double y0 = 0.0;
  double vx = 0.0;  // px/frame, used when displacements is empty
  double vy = 0.0;
  /// Displacement from frame t to t+1; when shorter than the sequence the
  /// remaining steps are zero.
  std::vector<std::array<double, 2>> displacements;
  TextureSpec texture{2, 200.0, 40.0, 6.0};

  std::array<double, 2> step(int t) const;
};

struct SceneSpec {
  int width = 320;
  int height = 240;
  int frames = 10;
  BackgroundSpec background;
  std::vector<SpriteSpec> sprites;
  std::uint64_t seed = 0;  // mixed into every texture seed

  void validate() const;
};

struct Scene {
  std::vector<LumaFrame> frames;
  std::vector<BinaryImage> masks;               // per frame, any sprite
  std::vector<std::vector<RoiRect>> boxes;      // per frame, one per sprite
  std::vector<FlowField> flows;                 // pair (t, t+1), anchored at frame t
  std::vector<std::vector<std::array<double, 2>>> positions;  // per frame, per sprite top-left
};

/// Sprite top-left positions for every frame.
std::vector<std::vector<std::array<double, 2>>> sprite_positions(const SceneSpec& spec);

Scene gen_scene(const SceneSpec& spec);

/// Ground-truth flow for pair (t, t+1) anchored at frame t+1 positions, the
/// field a backward warp from frame t needs.
FlowField gt_flow_at_target(const SceneSpec& spec, int t);

/// Writes frames/, gt_masks/, gt_flow/ and gt_boxes.txt under dir.
void write_scene(const Scene& scene, const std::filesystem::path& dir);

struct GroundTruth {
  std::vector<BinaryImage> masks;
  std::vector<std::vector<RoiRect>> boxes;
};

/// Reads gt_masks/ and gt_boxes.txt if present.
std::optional<GroundTruth> load_ground_truth(const std::filesystem::path& dir);

/// A bright sprite that rests, crosses one 20x20 cell at 10 px/frame, and
/// rests again: before frame 148 it is static, it covers the target cell
/// around frames 161-163, and it is static again from frame 172.
struct EnterLeaveScenario {
  SceneSpec spec;
  int cell_row = 1;
  int cell_col = 10;
};

EnterLeaveScenario enter_leave_scenario();

}  // namespace neuroflow
