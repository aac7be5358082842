#pragma once

#include "neuroflow/image.hpp"

namespace neuroflow {

/// Pixel binning into sensory units plus the sensory gain.
struct BinConfig {
  int m = 20;                  // pixels per unit vertically
  int n = 20;                  // pixels per unit horizontally
  double a = 0.5 / 255.0;      // volts per intensity unit

  void validate() const;
  void validate_frame(int width, int height) const;
  int rows(int frame_height) const { return frame_height / m; }
  int cols(int frame_width) const { return frame_width / n; }
};

/// Piecewise modulation: plus1*(V-bia1) above v_up, plus2*(V-bia2) otherwise.
struct ModulationConfig {
  double v_up = 0.2;
  double plus1 = 1.0;
  double plus2 = 1.0;
  double bia1 = 0.0;
  double bia2 = 0.4;

  void validate() const;
};

/// Rectified sensory voltages, one per unit, volts.
using SensoryGrid = CellGrid;

/// Mean intensity of every m x n block. Width and height must be multiples
/// of n and m respectively.
CellGrid bin_frame(const LumaFrame& frame, const BinConfig& cfg);

/// a * |curr - prev| per unit.
SensoryGrid sensory_voltage(const CellGrid& prev, const CellGrid& curr, const BinConfig& cfg);

/// Signed modulation voltage per unit.
CellGrid modulate(const SensoryGrid& vhat, const ModulationConfig& cfg);
double modulate(double vhat, const ModulationConfig& cfg);

}  // namespace neuroflow
