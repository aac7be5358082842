#include "neuroflow/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "neuroflow/frame_io.hpp"

namespace neuroflow {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  StageTimer(MetricsReport& report, const char* stage) : report_(report), stage_(stage), start_(Clock::now()) {}
  ~StageTimer() {
    report_.stage_seconds[stage_].push_back(std::chrono::duration<double>(Clock::now() - start_).count());
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  MetricsReport& report_;
  const char* stage_;
  Clock::time_point start_;
};

constexpr const char* kStages[] = {"pattern", "prefilter", "flow", "predict", "segment", "track"};

std::string numbered(const char* prefix, int t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%04d%s", prefix, t, ext);
  return buf;
}

void write_frame_output(const FrameOutput& out, const fs::path& dir) {
  write_mask_pgm(out.pattern, dir / "pattern" / numbered("p", out.frame, ".pgm"));
  write_rois(out.rois, dir / "rois" / numbered("r", out.frame, ".txt"));
  write_flo(out.flow, dir / "flow" / numbered("f", out.frame, ".flo"));
  if (out.predicted) write_pgm(*out.predicted, dir / "pred" / numbered("q", out.frame + 1, ".pgm"));
  if (out.mask) write_mask_pgm(*out.mask, dir / "masks" / numbered("m", out.frame, ".pgm"));
  std::ofstream boxes(dir / "boxes" / numbered("b", out.frame, ".txt"));
  if (!boxes) fail(ErrorCode::kIo, "cannot write boxes for frame " + std::to_string(out.frame));
  for (const auto& b : out.boxes) boxes << b.rect.x << ' ' << b.rect.y << ' ' << b.rect.w << ' ' << b.rect.h << ' ' << b.score << '\n';
}

FlowField run_flow(const LumaFrame& prev, const LumaFrame& curr, const RoiSet& rois, const PipelineConfig& cfg,
                   bool dense, int frame) {
  try {
    return dense ? compute_flow(prev, curr, cfg.backend) : gated_flow(prev, curr, rois, cfg.backend);
  } catch (const Error& e) {
    fail(e.code(), "frame " + std::to_string(frame) + ": " + e.what());
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<LumaFrame>& frames,
                            const std::optional<GroundTruth>& gt, const RunOptions& options) {
  config.validate();
  if (frames.size() < 2) fail(ErrorCode::kEmptySequence, "pipeline needs at least 2 frames");
  const int width = frames.front().width, height = frames.front().height;
  for (const auto& f : frames)
    if (!f.same_shape(width, height)) fail(ErrorCode::kDimensionMismatch, "frames differ in size");
  config.bin.validate_frame(width, height);
  const int rows = config.bin.rows(height), cols = config.bin.cols(width);
  const bool conventional = config.mode == PipelineMode::kConventional;

  if (options.write_dir)
    for (const char* sub : {"pattern", "rois", "flow", "pred", "masks", "boxes"})
      fs::create_directories(*options.write_dir / sub);

  PipelineResult result;
  for (const char* stage : kStages) result.report.stage_seconds[stage];
  MemristorArray array(rows, cols, config.memristor);
  CellGrid prev_grid = bin_frame(frames.front(), config.bin);
  const RoiSet full_frame{RoiRect{0, 0, width, height}};

  for (int t = 1; t < static_cast<int>(frames.size()); ++t) {
    const LumaFrame& prev = frames[static_cast<std::size_t>(t - 1)];
    const LumaFrame& curr = frames[static_cast<std::size_t>(t)];
    FrameOutput out;
    out.frame = t;
    MetricsReport& rep = result.report;

    {
      StageTimer timer(rep, "pattern");
      if (conventional) {
        out.pattern = MotionPattern(cols, rows, 1);
      } else {
        CellGrid grid = bin_frame(curr, config.bin);
        out.pattern = array.step_grids(prev_grid, grid, config.bin, config.modulation);
        prev_grid = std::move(grid);
      }
    }
    {
      StageTimer timer(rep, "prefilter");
      if (conventional || config.force_full_frame_roi) {
        out.rois = full_frame;
      } else {
        out.rois = pattern_to_rois(out.pattern, config.bin, width, height, config.prefilter);
      }
    }
    {
      StageTimer timer(rep, "flow");
      out.flow = run_flow(prev, curr, out.rois, config, conventional, t);
    }
    const NeuroFlowTensor tensor = assemble_tensor(out.pattern, config.bin, out.flow);

    FrameMetrics fm;
    fm.frame = t;
    const bool has_next = t + 1 < static_cast<int>(frames.size());
    if (config.tasks.predict) {
      {
        StageTimer timer(rep, "predict");
        out.predicted = warp_predict(curr, tensor, config.lanczos_n);
      }
      if (has_next) fm.ssim = ssim(*out.predicted, frames[static_cast<std::size_t>(t + 1)], config.ssim_mode);
    }
    const std::size_t ref = static_cast<std::size_t>(t - 1);
    if (config.tasks.segment) {
      {
        StageTimer timer(rep, "segment");
        out.mask = segment_mask(tensor, out.rois, config.segment);
      }
      if (gt && ref < gt->masks.size()) fm.pa = pixel_accuracy(*out.mask, gt->masks[ref]);
    }
    if (config.tasks.track) {
      {
        StageTimer timer(rep, "track");
        out.boxes = track_objects(tensor, out.rois, config.segment, config.track);
      }
      if (gt && ref < gt->boxes.size() && !gt->boxes[ref].empty()) fm.mean_iou = mean_box_iou(out.boxes, gt->boxes[ref]);
    }
    rep.frames.push_back(fm);

    if (options.write_dir) write_frame_output(out, *options.write_dir);
    if (options.keep_outputs) result.outputs.push_back(std::move(out));
  }

  if (options.write_dir) {
    std::ofstream report(*options.write_dir / "report.json");
    if (!report) fail(ErrorCode::kIo, "cannot write report.json");
    report << result.report.to_json() << '\n';
  }
  return result;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  if (config.input_dir.empty()) fail(ErrorCode::kConfig, "input_dir is not set");
  const fs::path input(config.input_dir);
  const fs::path frame_dir = fs::is_directory(input / "frames") ? input / "frames" : input;
  const auto frames = load_sequence(frame_dir);
  RunOptions options;
  options.keep_outputs = false;
  if (!config.output_dir.empty()) options.write_dir = fs::path(config.output_dir);
  return run_pipeline(config, frames, load_ground_truth(input), options);
}

BenchReport bench_compare(const PipelineConfig& config, const std::vector<LumaFrame>& frames,
                          const std::optional<GroundTruth>& gt, int repetitions) {
  require(repetitions >= 3, "bench needs at least 3 repetitions");
  BenchReport report;
  report.repetitions = repetitions;

  auto run_mode = [&](PipelineMode mode) {
    PipelineConfig cfg = config;
    cfg.mode = mode;
    ModeSummary summary;
    summary.mode = mode;
    std::map<std::string, std::vector<double>> per_rep;
    for (int r = 0; r < repetitions; ++r) {
      RunOptions options;
      options.keep_outputs = false;
      const PipelineResult res = run_pipeline(cfg, frames, gt, options);
      for (const char* stage : kStages) per_rep[stage].push_back(res.report.total_seconds(stage));
      if (r == 0) {
        summary.ssim = res.report.mean_ssim();
        summary.pa = res.report.mean_pa();
        summary.mean_iou = res.report.mean_iou();
      }
    }
    for (auto& [stage, values] : per_rep) summary.median_stage_seconds[stage] = median(values);
    return summary;
  };

  report.neuromorphic = run_mode(PipelineMode::kNeuromorphic);
  report.conventional = run_mode(PipelineMode::kConventional);

  auto total = [](const ModeSummary& s) {
    double sum = 0.0;
    for (const auto& [stage, sec] : s.median_stage_seconds) sum += sec;
    return sum;
  };
  const double gated = report.neuromorphic.median_stage_seconds["flow"];
  const double dense = report.conventional.median_stage_seconds["flow"];
  report.flow_speedup = gated > 0.0 ? dense / gated : 0.0;
  const double t_neuro = total(report.neuromorphic);
  report.total_speedup = t_neuro > 0.0 ? total(report.conventional) / t_neuro : 0.0;
  return report;
}

namespace {

struct TaskRow {
  const char* task;
  const char* metric;
  const char* stage;
  std::optional<double> ModeSummary::*value;
};

constexpr TaskRow kTaskRows[] = {
    {"predict", "ssim", "predict", &ModeSummary::ssim},
    {"segment", "pa", "segment", &ModeSummary::pa},
    {"track", "iou", "track", &ModeSummary::mean_iou},
};

double stage_time(const ModeSummary& s, const char* stage) {
  const auto it = s.median_stage_seconds.find(stage);
  return it == s.median_stage_seconds.end() ? 0.0 : it->second;
}

}  // namespace

std::string BenchReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(9) << "task" << std::setw(14) << "mode" << std::setw(8) << "metric" << std::setw(10)
     << "value" << "time_s (flow + task)\n";
  for (const auto& row : kTaskRows)
    for (const ModeSummary* s : {&neuromorphic, &conventional}) {
      const auto value = s->*row.value;
      std::ostringstream v;
      if (value) {
        v << std::fixed << std::setprecision(4) << *value;
      } else {
        v << "n/a";
      }
      os << std::setw(9) << row.task << std::setw(14) << to_string(s->mode) << std::setw(8) << row.metric
         << std::setw(10) << v.str() << std::fixed << std::setprecision(4)
         << stage_time(*s, "flow") + stage_time(*s, row.stage) << '\n';
    }
  os << std::setprecision(2) << "flow speedup " << flow_speedup << "x, total speedup " << total_speedup << "x over "
     << repetitions << " repetitions\n";
  return os.str();
}

std::string BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["repetitions"] = repetitions;
  j["flow_speedup"] = flow_speedup;
  j["total_speedup"] = total_speedup;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["rows"] = nlohmann::json::array();
  for (const auto& row : kTaskRows)
    for (const ModeSummary* s : {&neuromorphic, &conventional})
      j["rows"].push_back({{"task", row.task},
                           {"mode", to_string(s->mode)},
                           {"metric", row.metric},
                           {"value", opt(s->*row.value)},
                           {"seconds", stage_time(*s, "flow") + stage_time(*s, row.stage)}});
  for (const ModeSummary* s : {&neuromorphic, &conventional}) {
    nlohmann::ordered_json stages;
    for (const auto& [stage, sec] : s->median_stage_seconds) stages[stage] = sec;
    j["median_stage_seconds"][to_string(s->mode)] = stages;
  }
  return j.dump(2);
}

}  // namespace neuroflow
