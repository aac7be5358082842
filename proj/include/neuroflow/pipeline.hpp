#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "neuroflow/flow.hpp"
#include "neuroflow/memristor.hpp"
#include "neuroflow/metrics.hpp"
#include "neuroflow/prefilter.hpp"
#include "neuroflow/sensor.hpp"
#include "neuroflow/synth.hpp"
#include "neuroflow/tasks.hpp"

namespace neuroflow {

enum class PipelineMode { kNeuromorphic, kConventional };

const char* to_string(PipelineMode mode);
PipelineMode parse_mode(const std::string& name);

struct TaskSelection {
  bool predict = true;
  bool segment = true;
  bool track = true;
};

struct PipelineConfig {
  BinConfig bin;
  ModulationConfig modulation;
  MemristorParams memristor;
  PrefilterParams prefilter;
  FlowBackendSpec backend = FarnebackParams{};
  SegmentParams segment;
  TrackParams track;
  TaskSelection tasks;
  int lanczos_n = 3;
  SsimMode ssim_mode = SsimMode::kWindowed;

  std::string input_dir;
  std::string output_dir;
  PipelineMode mode = PipelineMode::kNeuromorphic;
  /// Neuromorphic mode with a single whole-frame ROI (benchmark control).
  bool force_full_frame_roi = false;

  void validate() const;
};

/// Nested JSON document; every key is optional and unknown keys are rejected.
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_to_json(const PipelineConfig& config);

SceneSpec parse_scene_spec(const std::string& json_text);
SceneSpec load_scene_spec(const std::filesystem::path& path);
std::string scene_spec_to_json(const SceneSpec& spec);

struct FrameOutput {
  int frame = 0;  // index of the current frame of the pair (frame-1, frame)
  MotionPattern pattern;
  RoiSet rois;
  FlowField flow;
  std::optional<LumaFrame> predicted;  // estimate of frame+1
  std::optional<BinaryImage> mask;
  std::vector<TrackBox> boxes;
};

struct PipelineResult {
  std::vector<FrameOutput> outputs;
  MetricsReport report;
};

struct RunOptions {
  bool keep_outputs = true;
  std::optional<std::filesystem::path> write_dir;
};

/// Runs the sequence pair by pair. Frame 0 only primes the memristor array.
/// Segmentation and tracking for pair (t-1, t) are scored against the
/// ground truth of frame t-1, prediction of frame t+1 against that frame.
PipelineResult run_pipeline(const PipelineConfig& config, const std::vector<LumaFrame>& frames,
                            const std::optional<GroundTruth>& gt = std::nullopt, const RunOptions& options = {});

/// Loads input_dir (frames/ sub-directory when present) and writes to output_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

struct ModeSummary {
  PipelineMode mode{};
  std::map<std::string, double> median_stage_seconds;  // whole sequence per repetition, median over repetitions
  std::optional<double> ssim;
  std::optional<double> pa;
  std::optional<double> mean_iou;
};

struct BenchReport {
  int repetitions = 0;
  ModeSummary neuromorphic;
  ModeSummary conventional;
  double flow_speedup = 0.0;   // dense flow time / gated flow time
  double total_speedup = 0.0;  // all stages

  /// One row per (task, mode): metric value plus flow + task time.
  std::string to_table() const;
  std::string to_json() const;
};

BenchReport bench_compare(const PipelineConfig& config, const std::vector<LumaFrame>& frames,
                          const std::optional<GroundTruth>& gt, int repetitions);

}  // namespace neuroflow
