#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "neuroflow/frame_io.hpp"
#include "neuroflow/pipeline.hpp"

namespace fs = std::filesystem;
using namespace neuroflow;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

struct Options {
  std::string config;
  std::string mode;
  std::string backend;
  std::string out;
  int reps = 5;
  std::optional<std::uint64_t> seed;
  std::string prev, curr, flo, frame;
  double mag_ref = 8.0;
};

PipelineConfig pipeline_config(const Options& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_pipeline_config(o.config);
  if (!o.mode.empty()) cfg.mode = parse_mode(o.mode);
  if (!o.backend.empty() && o.backend != backend_name(cfg.backend)) {
    if (o.backend == "farneback") {
      cfg.backend = FarnebackParams{};
    } else if (o.backend == "blockmatch") {
      cfg.backend = BlockMatchParams{};
    } else {
      fail(ErrorCode::kConfig, "backend '" + o.backend + "' needs its parameters in the config file");
    }
  }
  if (!o.out.empty()) cfg.output_dir = o.out;
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  return cfg;
}

int cmd_synth(const Options& o) {
  if (o.out.empty()) fail(ErrorCode::kConfig, "synth needs --out");
  SceneSpec spec = o.config.empty() ? SceneSpec{} : load_scene_spec(o.config);
  if (o.seed) spec.seed = *o.seed;
  write_scene(gen_scene(spec), o.out);
  std::cout << "wrote " << spec.frames << " frames to " << o.out << '\n';
  return 0;
}

void print_summary(const MetricsReport& r) {
  auto show = [](const char* name, std::optional<double> v) {
    std::cout << name << ' ';
    if (v) {
      std::cout << *v;
    } else {
      std::cout << "n/a";
    }
    std::cout << '\n';
  };
  show("mean_ssim", r.mean_ssim());
  show("mean_pa", r.mean_pa());
  show("mean_iou", r.mean_iou());
  for (const auto& [stage, _] : r.stage_seconds) std::cout << stage << "_s " << r.total_seconds(stage) << '\n';
}

int cmd_run(const Options& o) {
  const PipelineConfig cfg = pipeline_config(o);
  print_summary(run_pipeline(cfg).report);
  return 0;
}

int cmd_bench(const Options& o) {
  const PipelineConfig cfg = pipeline_config(o);
  if (cfg.input_dir.empty()) fail(ErrorCode::kConfig, "input_dir is not set");
  const fs::path input(cfg.input_dir);
  const auto frames = load_sequence(fs::is_directory(input / "frames") ? input / "frames" : input);
  const BenchReport report = bench_compare(cfg, frames, load_ground_truth(input), o.reps);
  std::cout << report.to_table();
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    std::ofstream(fs::path(cfg.output_dir) / "bench.json") << report.to_json() << '\n';
  }
  return 0;
}

int cmd_flow(const Options& o) {
  if (o.out.empty()) fail(ErrorCode::kConfig, "flow needs --out <file.flo>");
  const PipelineConfig cfg = pipeline_config(Options{o.config, "", o.backend, "", o.reps, {}, {}, {}, {}, {}, 8.0});
  write_flo(compute_flow(read_pgm(o.prev), read_pgm(o.curr), cfg.backend), o.out);
  return 0;
}

int cmd_viz(const Options& o) {
  if (o.out.empty()) fail(ErrorCode::kConfig, "viz needs --out <file.ppm>");
  const FlowField flow = read_flo(o.flo);
  std::vector<std::uint8_t> rgb = hsv_to_rgb(polar_to_hsv(flow_to_polar(flow), o.mag_ref));
  if (!o.frame.empty()) {
    const LumaFrame base = read_pgm(o.frame);
    if (!base.same_shape(flow.width, flow.height)) fail(ErrorCode::kDimensionMismatch, "frame and flow differ in size");
    for (std::size_t i = 0; i < base.data.size(); ++i)
      for (std::size_t c = 0; c < 3; ++c) rgb[3 * i + c] = static_cast<std::uint8_t>((rgb[3 * i + c] + base.data[i] + 1) / 2);
  }
  write_ppm(flow.width, flow.height, rgb, o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neuromorphic optical flow pipeline"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "generate a synthetic scene with ground truth");
  synth->add_option("--config", o.config, "scene spec (JSON)");
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--seed", o.seed, "scene seed");

  auto* run = app.add_subcommand("run", "run the pipeline on a sequence");
  auto* bench = app.add_subcommand("bench", "compare neuromorphic and conventional modes");
  for (auto* sub : {run, bench}) {
    sub->add_option("--config", o.config, "pipeline config (JSON)")->required();
    sub->add_option("--mode", o.mode)->check(CLI::IsMember({"neuromorphic", "conventional"}));
    sub->add_option("--backend", o.backend)->check(CLI::IsMember({"farneback", "blockmatch", "external"}));
    sub->add_option("--out", o.out, "output directory");
  }
  bench->add_option("--reps", o.reps, "repetitions")->check(CLI::Range(3, 1000));

  auto* flow = app.add_subcommand("flow", "dense flow for one frame pair");
  flow->add_option("prev", o.prev)->required();
  flow->add_option("curr", o.curr)->required();
  flow->add_option("--config", o.config, "pipeline config (JSON)");
  flow->add_option("--backend", o.backend)->check(CLI::IsMember({"farneback", "blockmatch", "external"}));
  flow->add_option("--out", o.out, "output .flo")->required();

  auto* viz = app.add_subcommand("viz", "render a .flo as an HSV colour image");
  viz->add_option("flo", o.flo)->required();
  viz->add_option("--frame", o.frame, "PGM to blend underneath");
  viz->add_option("--mag-ref", o.mag_ref, "magnitude shown at full brightness")->check(CLI::PositiveNumber);
  viz->add_option("--out", o.out, "output .ppm")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*run) return cmd_run(o);
    if (*bench) return cmd_bench(o);
    if (*flow) return cmd_flow(o);
    if (*viz) return cmd_viz(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::kBackendFailure) return kExitBackend;
    if (e.code() == ErrorCode::kConfig) return kExitUsage;
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
