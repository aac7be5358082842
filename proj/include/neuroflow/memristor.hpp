#pragma once

#include <filesystem>
#include <span>

#include "neuroflow/image.hpp"
#include "neuroflow/sensor.hpp"

namespace neuroflow {

/// Behavioral SDC memristor constants. State s in [0,1]: 0 is fully
/// high-resistance, 1 fully low-resistance.
struct MemristorParams {
  double alpha_set = 20.0;      // 1/(V*s)
  double alpha_reset = 20.0;    // 1/(V*s)
  double g_on = 100e-6;         // S
  double g_off = 1e-6;          // S
  double read_threshold = 0.5;
  double pulse_width = 1.0;     // s, one frame interval

  void validate() const;
};

/// One programming pulse: positive drive relaxes toward 1, negative toward 0,
/// proportionally to the remaining distance to that rail.
double apply_pulse(double s, double v, const MemristorParams& params);

/// Ohmic read with state-interpolated conductance.
double device_current(double s, double v, const MemristorParams& params);

/// Frames needed for a cell at state s_hi to drop below the read threshold
/// under a constant negative drive v_static, using the continuous
/// exponential-decay bound. Always >= 1.
int reset_frame_bound(double s_hi, double v_static, const MemristorParams& params);

class MemristorArray {
 public:
  MemristorArray(int rows, int cols, MemristorParams params = {}, double initial_state = 0.0);

  int rows() const { return state_.height; }
  int cols() const { return state_.width; }
  const MemristorParams& params() const { return params_; }

  double state(int row, int col) const { return state_.at(col, row); }
  void set_state(int row, int col, double s);
  const CellGrid& states() const { return state_; }

  /// Applies one pulse per cell from a modulation grid of matching shape.
  void apply(const CellGrid& modulation);

  /// bit = 1 iff s >= read_threshold.
  MotionPattern read_pattern() const;

  /// bin -> sensory voltage -> modulate -> pulse, then read the pattern.
  MotionPattern step_frame(const LumaFrame& prev, const LumaFrame& curr, const BinConfig& bin_cfg,
                           const ModulationConfig& mod_cfg);

  /// Same, reusing already binned grids.
  MotionPattern step_grids(const CellGrid& prev, const CellGrid& curr, const BinConfig& bin_cfg,
                           const ModulationConfig& mod_cfg);

  /// State dump as an 8-bit image, s quantised to round(255*s).
  void dump(const std::filesystem::path& path) const;
  static MemristorArray load(const std::filesystem::path& path, MemristorParams params = {});

 private:
  CellGrid state_;
  MemristorParams params_;
};

}  // namespace neuroflow
