#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "neuroflow/pipeline.hpp"

namespace neuroflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads optional keys from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail(ErrorCode::kConfig, "'" + name_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorCode::kConfig, name_ + "." + key + ": " + e.what());
    }
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), name_ + "." + key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail(ErrorCode::kConfig, "unknown key '" + name_ + "." + item.key() + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, std::string("malformed config: ") + e.what());
  }
}

std::string slurp_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void read_texture(Section s, TextureSpec& t) {
  s.get("seed", t.seed);
  s.get("base", t.base);
  s.get("amplitude", t.amplitude);
  s.get("cell", t.cell);
  s.finish();
}

json texture_json(const TextureSpec& t) {
  return {{"seed", t.seed}, {"base", t.base}, {"amplitude", t.amplitude}, {"cell", t.cell}};
}

}  // namespace

const char* to_string(PipelineMode mode) {
  return mode == PipelineMode::kNeuromorphic ? "neuromorphic" : "conventional";
}

PipelineMode parse_mode(const std::string& name) {
  if (name == "neuromorphic") return PipelineMode::kNeuromorphic;
  if (name == "conventional") return PipelineMode::kConventional;
  fail(ErrorCode::kConfig, "unknown mode '" + name + "'");
}

void PipelineConfig::validate() const {
  bin.validate();
  modulation.validate();
  memristor.validate();
  prefilter.validate();
  std::visit([](const auto& p) { p.validate(); }, backend);
  segment.validate();
  require(track.min_area >= 1, "min_area must be >= 1");
  require(track.nms_iou > 0.0 && track.nms_iou < 1.0, "nms_iou must lie in (0,1)");
  require(track.kernel >= 1 && track.kernel % 2 == 1, "track kernel must be odd");
  require(lanczos_n >= 1, "lanczos_n must be >= 1");
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  const json root = parse_json(json_text);
  PipelineConfig cfg;
  Section top(root, "config");
  top.get("input_dir", cfg.input_dir);
  top.get("output_dir", cfg.output_dir);
  top.get("force_full_frame_roi", cfg.force_full_frame_roi);
  if (top.has("mode")) cfg.mode = parse_mode(top.raw("mode").get<std::string>());

  if (auto s = top.child("bin")) {
    s->get("m", cfg.bin.m);
    s->get("n", cfg.bin.n);
    s->get("a", cfg.bin.a);
    s->finish();
  }
  if (auto s = top.child("modulation")) {
    s->get("v_up", cfg.modulation.v_up);
    s->get("plus1", cfg.modulation.plus1);
    s->get("plus2", cfg.modulation.plus2);
    s->get("bia1", cfg.modulation.bia1);
    s->get("bia2", cfg.modulation.bia2);
    s->finish();
  }
  if (auto s = top.child("memristor")) {
    auto& p = cfg.memristor;
    s->get("alpha_set", p.alpha_set);
    s->get("alpha_reset", p.alpha_reset);
    s->get("g_on", p.g_on);
    s->get("g_off", p.g_off);
    s->get("read_threshold", p.read_threshold);
    s->get("pulse_width", p.pulse_width);
    s->finish();
  }
  if (auto s = top.child("prefilter")) {
    auto& p = cfg.prefilter;
    s->get("blur_sigma", p.blur_sigma);
    s->get("edge_thresh_frac", p.edge_thresh_frac);
    s->get("expand", p.expand);
    s->get("merge", p.merge);
    s->get("merge_iou", p.merge_iou);
    s->finish();
  }
  if (auto s = top.child("flow")) {
    std::string kind = "farneback";
    s->get("backend", kind);
    FarnebackParams fb;
    BlockMatchParams bm;
    ExternalParams ext;
    if (auto f = s->child("farneback")) {
      f->get("pyramid_levels", fb.pyramid_levels);
      f->get("pyramid_scale", fb.pyramid_scale);
      f->get("window_sigma", fb.window_sigma);
      f->get("iterations", fb.iterations);
      f->get("poly_n", fb.poly_n);
      f->get("poly_sigma", fb.poly_sigma);
      f->finish();
    }
    if (auto b = s->child("blockmatch")) {
      b->get("block", bm.block);
      b->get("search_radius", bm.search_radius);
      b->finish();
    }
    if (auto e = s->child("external")) {
      e->get("command", ext.command);
      e->get("max_concurrent", ext.max_concurrent);
      e->get("padding", ext.padding);
      e->finish();
    }
    s->finish();
    if (kind == "farneback") {
      cfg.backend = fb;
    } else if (kind == "blockmatch") {
      cfg.backend = bm;
    } else if (kind == "external") {
      cfg.backend = ext;
    } else {
      fail(ErrorCode::kConfig, "unknown flow backend '" + kind + "'");
    }
  }
  if (auto s = top.child("tasks")) {
    s->get("lanczos_n", cfg.lanczos_n);
    s->get("v_thresh", cfg.segment.v_thresh);
    s->get("mag_ref", cfg.segment.mag_ref);
    s->get("kernel", cfg.segment.kernel);
    s->get("track_kernel", cfg.track.kernel);
    s->get("min_area", cfg.track.min_area);
    s->get("nms_iou", cfg.track.nms_iou);
    s->get("predict", cfg.tasks.predict);
    s->get("segment", cfg.tasks.segment);
    s->get("track", cfg.tasks.track);
    s->finish();
  }
  if (auto s = top.child("metrics")) {
    std::string mode = "windowed";
    s->get("ssim_mode", mode);
    s->finish();
    if (mode == "windowed") {
      cfg.ssim_mode = SsimMode::kWindowed;
    } else if (mode == "global") {
      cfg.ssim_mode = SsimMode::kGlobal;
    } else {
      fail(ErrorCode::kConfig, "unknown ssim_mode '" + mode + "'");
    }
  }
  top.finish();
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) { return parse_pipeline_config(slurp_text(path)); }

std::string pipeline_config_to_json(const PipelineConfig& c) {
  const auto& fb = std::holds_alternative<FarnebackParams>(c.backend) ? std::get<FarnebackParams>(c.backend) : FarnebackParams{};
  const auto& bm = std::holds_alternative<BlockMatchParams>(c.backend) ? std::get<BlockMatchParams>(c.backend) : BlockMatchParams{};
  const auto& ext = std::holds_alternative<ExternalParams>(c.backend) ? std::get<ExternalParams>(c.backend) : ExternalParams{};
  nlohmann::ordered_json j;
  j["input_dir"] = c.input_dir;
  j["output_dir"] = c.output_dir;
  j["mode"] = to_string(c.mode);
  j["force_full_frame_roi"] = c.force_full_frame_roi;
  j["bin"] = {{"m", c.bin.m}, {"n", c.bin.n}, {"a", c.bin.a}};
  j["modulation"] = {{"v_up", c.modulation.v_up}, {"plus1", c.modulation.plus1}, {"plus2", c.modulation.plus2},
                     {"bia1", c.modulation.bia1}, {"bia2", c.modulation.bia2}};
  j["memristor"] = {{"alpha_set", c.memristor.alpha_set},   {"alpha_reset", c.memristor.alpha_reset},
                    {"g_on", c.memristor.g_on},             {"g_off", c.memristor.g_off},
                    {"read_threshold", c.memristor.read_threshold}, {"pulse_width", c.memristor.pulse_width}};
  j["prefilter"] = {{"blur_sigma", c.prefilter.blur_sigma}, {"edge_thresh_frac", c.prefilter.edge_thresh_frac},
                    {"expand", c.prefilter.expand},         {"merge", c.prefilter.merge},
                    {"merge_iou", c.prefilter.merge_iou}};
  j["flow"] = {{"backend", backend_name(c.backend)},
               {"farneback",
                {{"pyramid_levels", fb.pyramid_levels}, {"pyramid_scale", fb.pyramid_scale},
                 {"window_sigma", fb.window_sigma}, {"iterations", fb.iterations}, {"poly_n", fb.poly_n},
                 {"poly_sigma", fb.poly_sigma}}},
               {"blockmatch", {{"block", bm.block}, {"search_radius", bm.search_radius}}},
               {"external", {{"command", ext.command}, {"max_concurrent", ext.max_concurrent}, {"padding", ext.padding}}}};
  j["tasks"] = {{"lanczos_n", c.lanczos_n},     {"v_thresh", c.segment.v_thresh},  {"mag_ref", c.segment.mag_ref},
                {"kernel", c.segment.kernel},   {"track_kernel", c.track.kernel}, {"min_area", c.track.min_area},
                {"nms_iou", c.track.nms_iou},   {"predict", c.tasks.predict},      {"segment", c.tasks.segment},
                {"track", c.tasks.track}};
  j["metrics"] = {{"ssim_mode", c.ssim_mode == SsimMode::kWindowed ? "windowed" : "global"}};
  return j.dump(2);
}

SceneSpec parse_scene_spec(const std::string& json_text) {
  const json root = parse_json(json_text);
  SceneSpec spec;
  Section top(root, "scene");
  top.get("width", spec.width);
  top.get("height", spec.height);
  top.get("frames", spec.frames);
  top.get("seed", spec.seed);
  if (auto bg = top.child("background")) {
    if (auto t = bg->child("texture")) read_texture(*t, spec.background.texture);
    bg->get("drift_x", spec.background.drift_x);
    bg->get("drift_y", spec.background.drift_y);
    bg->finish();
  }
  if (top.has("sprites")) {
    const json& list = top.raw("sprites");
    if (!list.is_array()) fail(ErrorCode::kConfig, "'scene.sprites' must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section s(list[i], "scene.sprites[" + std::to_string(i) + "]");
      SpriteSpec sp;
      std::string shape = "rect";
      s.get("shape", shape);
      if (shape == "rect") {
        sp.shape = SpriteShape::kRect;
      } else if (shape == "disk") {
        sp.shape = SpriteShape::kDisk;
      } else {
        fail(ErrorCode::kConfig, "unknown sprite shape '" + shape + "'");
      }
      s.get("w", sp.w);
      s.get("h", sp.h);
      s.get("x0", sp.x0);
      s.get("y0", sp.y0);
      s.get("vx", sp.vx);
      s.get("vy", sp.vy);
      s.get("displacements", sp.displacements);
      if (auto t = s.child("texture")) read_texture(*t, sp.texture);
      s.finish();
      spec.sprites.push_back(sp);
    }
  }
  top.finish();
  try {
    spec.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  return spec;
}

SceneSpec load_scene_spec(const fs::path& path) { return parse_scene_spec(slurp_text(path)); }

std::string scene_spec_to_json(const SceneSpec& spec) {
  nlohmann::ordered_json j;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["frames"] = spec.frames;
  j["seed"] = spec.seed;
  j["background"] = {{"texture", texture_json(spec.background.texture)},
                     {"drift_x", spec.background.drift_x},
                     {"drift_y", spec.background.drift_y}};
  j["sprites"] = json::array();
  for (const auto& s : spec.sprites) {
    nlohmann::ordered_json sj;
    sj["shape"] = s.shape == SpriteShape::kRect ? "rect" : "disk";
    sj["w"] = s.w;
    sj["h"] = s.h;
    sj["x0"] = s.x0;
    sj["y0"] = s.y0;
    sj["vx"] = s.vx;
    sj["vy"] = s.vy;
    if (!s.displacements.empty()) sj["displacements"] = s.displacements;
    sj["texture"] = texture_json(s.texture);
    j["sprites"].push_back(sj);
  }
  return j.dump(2);
}

}  // namespace neuroflow
