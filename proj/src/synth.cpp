#include "neuroflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "neuroflow/frame_io.hpp"

namespace neuroflow {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

std::uint64_t mix_seed(std::uint64_t scene_seed, std::uint64_t texture_seed) {
  return splitmix64(scene_seed ^ splitmix64(texture_seed));
}

double texture_value(const TextureSpec& tex, const ValueNoise& noise, double x, double y) {
  return tex.base + tex.amplitude * (2.0 * noise(x, y) - 1.0);
}

std::string numbered(const char* prefix, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%04d%s", prefix, index, ext);
  return buf;
}

// Per-sprite coverage and premultiplied colour over the frame, produced by
// bilinear splatting of the sprite raster at a fractional position.
struct SpriteLayer {
  RoiRect extent;
  std::vector<double> alpha;
  std::vector<double> color;

  double alpha_at(int x, int y) const {
    if (!extent.contains(x, y)) return 0.0;
    return alpha[static_cast<std::size_t>(y - extent.y) * extent.w + (x - extent.x)];
  }
};

SpriteLayer render_sprite(const SpriteSpec& sprite, std::array<double, 2> pos, std::uint64_t scene_seed) {
  const ValueNoise noise(mix_seed(scene_seed, sprite.texture.seed), sprite.texture.cell);
  const int ix = static_cast<int>(std::floor(pos[0])), iy = static_cast<int>(std::floor(pos[1]));
  const double fx = pos[0] - ix, fy = pos[1] - iy;
  SpriteLayer layer;
  layer.extent = {ix, iy, sprite.w + 1, sprite.h + 1};
  layer.alpha.assign(static_cast<std::size_t>(layer.extent.area()), 0.0);
  layer.color.assign(layer.alpha.size(), 0.0);
  const double radius = sprite.w / 2.0;
  const double weights[2][2] = {{(1 - fx) * (1 - fy), fx * (1 - fy)}, {(1 - fx) * fy, fx * fy}};
  for (int j = 0; j < sprite.h; ++j)
    for (int i = 0; i < sprite.w; ++i) {
      if (sprite.shape == SpriteShape::kDisk) {
        const double dx = i + 0.5 - radius, dy = j + 0.5 - radius;
        if (dx * dx + dy * dy > radius * radius) continue;
      }
      const double c = texture_value(sprite.texture, noise, i, j);
      for (int oy = 0; oy < 2; ++oy)
        for (int ox = 0; ox < 2; ++ox) {
          const double w = weights[oy][ox];
          if (w == 0.0) continue;
          const std::size_t k = static_cast<std::size_t>(j + oy) * layer.extent.w + (i + ox);
          layer.alpha[k] += w;
          layer.color[k] += w * c;
        }
    }
  return layer;
}

void check_inside(const SceneSpec& spec, const SpriteSpec& s, std::array<double, 2> p, int t) {
  if (p[0] < 1.0 || p[1] < 1.0 || p[0] + s.w > spec.width - 1 || p[1] + s.h > spec.height - 1)
    fail(ErrorCode::kInvalidArgument, "sprite leaves the frame at frame " + std::to_string(t));
}

FlowField sprite_flow(const SceneSpec& spec, const std::vector<SpriteLayer>& layers, int t) {
  FlowField flow(spec.width, spec.height);
  std::fill(flow.u.begin(), flow.u.end(), static_cast<float>(spec.background.drift_x));
  std::fill(flow.v.begin(), flow.v.end(), static_cast<float>(spec.background.drift_y));
  for (std::size_t s = 0; s < layers.size(); ++s) {
    const auto d = spec.sprites[s].step(t);
    const RoiRect r = clamp_to(layers[s].extent, spec.width, spec.height);
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x = r.x; x < r.right(); ++x)
        if (layers[s].alpha_at(x, y) >= 0.5) {
          flow.u[flow.index(x, y)] = static_cast<float>(d[0]);
          flow.v[flow.index(x, y)] = static_cast<float>(d[1]);
        }
  }
  return flow;
}

}  // namespace

double ValueNoise::lattice(long long i, long long j) const {
  const std::uint64_t h = splitmix64(seed_ ^ splitmix64(static_cast<std::uint64_t>(i) * 0x632be59bd9b4e019ULL +
                                                        static_cast<std::uint64_t>(j) * 0x85157af5ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double ValueNoise::operator()(double x, double y) const {
  const double gx = x / cell_, gy = y / cell_;
  const double fx = std::floor(gx), fy = std::floor(gy);
  const auto i = static_cast<long long>(fx), j = static_cast<long long>(fy);
  const double tx = smoothstep(gx - fx), ty = smoothstep(gy - fy);
  const double top = lattice(i, j) + tx * (lattice(i + 1, j) - lattice(i, j));
  const double bot = lattice(i, j + 1) + tx * (lattice(i + 1, j + 1) - lattice(i, j + 1));
  return top + ty * (bot - top);
}

std::array<double, 2> SpriteSpec::step(int t) const {
  if (displacements.empty()) return {vx, vy};
  if (t >= 0 && static_cast<std::size_t>(t) < displacements.size()) return displacements[static_cast<std::size_t>(t)];
  return {0.0, 0.0};
}

void SceneSpec::validate() const {
  require(width >= 1 && height >= 1, "scene dimensions must be positive");
  require(frames >= 1, "scene needs at least one frame");
  for (const auto& s : sprites) {
    require(s.w >= 1 && s.h >= 1, "sprite size must be positive");
    require(s.shape != SpriteShape::kDisk || s.w == s.h, "disk sprites must be square");
    require(s.texture.cell > 0.0, "texture cell must be positive");
  }
  require(background.texture.cell > 0.0, "texture cell must be positive");
}

std::vector<std::vector<std::array<double, 2>>> sprite_positions(const SceneSpec& spec) {
  spec.validate();
  std::vector<std::vector<std::array<double, 2>>> positions(static_cast<std::size_t>(spec.frames));
  for (const auto& s : spec.sprites) {
    std::array<double, 2> p{s.x0, s.y0};
    for (int t = 0; t < spec.frames; ++t) {
      check_inside(spec, s, p, t);
      positions[static_cast<std::size_t>(t)].push_back(p);
      const auto d = s.step(t);
      p = {p[0] + d[0], p[1] + d[1]};
    }
  }
  return positions;
}

Scene gen_scene(const SceneSpec& spec) {
  Scene scene;
  scene.positions = sprite_positions(spec);
  const ValueNoise bg_noise(mix_seed(spec.seed, spec.background.texture.seed), spec.background.texture.cell);

  std::vector<std::vector<SpriteLayer>> layers(static_cast<std::size_t>(spec.frames));
  for (int t = 0; t < spec.frames; ++t) {
    auto& frame_layers = layers[static_cast<std::size_t>(t)];
    for (std::size_t s = 0; s < spec.sprites.size(); ++s)
      frame_layers.push_back(render_sprite(spec.sprites[s], scene.positions[static_cast<std::size_t>(t)][s], spec.seed));

    const double ox = spec.background.drift_x * t, oy = spec.background.drift_y * t;
    std::vector<double> canvas(static_cast<std::size_t>(spec.width) * spec.height);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        canvas[static_cast<std::size_t>(y) * spec.width + x] = texture_value(spec.background.texture, bg_noise, x - ox, y - oy);

    BinaryImage mask(spec.width, spec.height, 0);
    std::vector<RoiRect> boxes;
    for (std::size_t s = 0; s < frame_layers.size(); ++s) {
      const SpriteLayer& layer = frame_layers[s];
      const RoiRect r = clamp_to(layer.extent, spec.width, spec.height);
      for (int y = r.y; y < r.bottom(); ++y)
        for (int x = r.x; x < r.right(); ++x) {
          const std::size_t k = static_cast<std::size_t>(y - layer.extent.y) * layer.extent.w + (x - layer.extent.x);
          const double a = std::min(1.0, layer.alpha[k]);
          double& px = canvas[static_cast<std::size_t>(y) * spec.width + x];
          px = px * (1.0 - a) + layer.color[k];
          if (layer.alpha[k] >= 0.5) mask.at(x, y) = 1;
        }
      const auto& p = scene.positions[static_cast<std::size_t>(t)][s];
      boxes.push_back({static_cast<int>(std::lround(p[0])), static_cast<int>(std::lround(p[1])), spec.sprites[s].w,
                       spec.sprites[s].h});
    }

    LumaFrame frame(spec.width, spec.height);
    for (std::size_t i = 0; i < canvas.size(); ++i)
      frame.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(canvas[i]), 0L, 255L));
    scene.frames.push_back(std::move(frame));
    scene.masks.push_back(std::move(mask));
    scene.boxes.push_back(std::move(boxes));
  }
  for (int t = 0; t + 1 < spec.frames; ++t) scene.flows.push_back(sprite_flow(spec, layers[static_cast<std::size_t>(t)], t));
  return scene;
}

FlowField gt_flow_at_target(const SceneSpec& spec, int t) {
  require(t >= 0 && t + 1 < spec.frames, "frame pair out of range");
  const auto positions = sprite_positions(spec);
  std::vector<SpriteLayer> layers;
  for (std::size_t s = 0; s < spec.sprites.size(); ++s)
    layers.push_back(render_sprite(spec.sprites[s], positions[static_cast<std::size_t>(t + 1)][s], spec.seed));
  return sprite_flow(spec, layers, t);
}

void write_scene(const Scene& scene, const fs::path& dir) {
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "gt_masks");
  fs::create_directories(dir / "gt_flow");
  for (std::size_t t = 0; t < scene.frames.size(); ++t) {
    write_pgm(scene.frames[t], dir / "frames" / numbered("f", static_cast<int>(t), ".pgm"));
    write_mask_pgm(scene.masks[t], dir / "gt_masks" / numbered("m", static_cast<int>(t), ".pgm"));
  }
  for (std::size_t t = 0; t < scene.flows.size(); ++t)
    write_flo(scene.flows[t], dir / "gt_flow" / numbered("g", static_cast<int>(t), ".flo"));
  std::ofstream boxes(dir / "gt_boxes.txt", std::ios::trunc);
  if (!boxes) fail(ErrorCode::kIo, "cannot write " + (dir / "gt_boxes.txt").string());
  for (std::size_t t = 0; t < scene.boxes.size(); ++t)
    for (const auto& b : scene.boxes[t]) boxes << t << ' ' << b.x << ' ' << b.y << ' ' << b.w << ' ' << b.h << '\n';
}

std::optional<GroundTruth> load_ground_truth(const fs::path& dir) {
  if (!fs::is_directory(dir / "gt_masks") || !fs::exists(dir / "gt_boxes.txt")) return std::nullopt;
  GroundTruth gt;
  std::vector<std::pair<std::string, fs::path>> masks;
  for (const auto& e : fs::directory_iterator(dir / "gt_masks"))
    if (e.path().extension() == ".pgm") masks.emplace_back(e.path().filename().string(), e.path());
  std::sort(masks.begin(), masks.end());
  for (const auto& [name, path] : masks) gt.masks.push_back(read_mask_pgm(path));
  gt.boxes.resize(gt.masks.size());
  std::ifstream in(dir / "gt_boxes.txt");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::size_t t = 0;
    RoiRect r;
    if (!(fields >> t >> r.x >> r.y >> r.w >> r.h)) fail(ErrorCode::kConfig, "malformed gt_boxes line: " + line);
    if (t >= gt.boxes.size()) gt.boxes.resize(t + 1);
    gt.boxes[t].push_back(r);
  }
  return gt;
}

EnterLeaveScenario enter_leave_scenario() {
  EnterLeaveScenario sc;
  SceneSpec& spec = sc.spec;
  spec.width = 400;
  spec.height = 60;
  spec.frames = 200;
  spec.seed = 7;
  spec.background.texture = {11, 10.0, 3.0, 8.0};
  SpriteSpec sprite;
  sprite.w = sprite.h = 20;
  sprite.x0 = 60.0;
  sprite.y0 = 20.0;
  sprite.texture = {12, 250.0, 3.0, 6.0};
  sprite.displacements.assign(148, {0.0, 0.0});
  sprite.displacements.resize(148 + 24, {10.0, 0.0});
  spec.sprites.push_back(sprite);
  sc.cell_row = 1;
  sc.cell_col = 10;
  return sc;
}

}  // namespace neuroflow
