#include "neuroflow/sensor.hpp"

#include <cmath>
#include <string>

namespace neuroflow {

void BinConfig::validate() const {
  require(m >= 1 && n >= 1, "bin sizes m and n must be >= 1");
  require(a > 0.0 && std::isfinite(a), "sensory gain a must be positive");
}

void BinConfig::validate_frame(int width, int height) const {
  validate();
  if (width % n != 0 || height % m != 0)
    fail(ErrorCode::kDimensionMismatch, "frame " + std::to_string(width) + "x" + std::to_string(height) +
                                            " is not divisible into " + std::to_string(n) + "x" +
                                            std::to_string(m) + " units");
}

void ModulationConfig::validate() const {
  require(plus1 > 0.0 && plus2 > 0.0, "modulation gains must be positive");
  require(bia1 < v_up && v_up <= bia2, "modulation requires bia1 < v_up <= bia2");
}

CellGrid bin_frame(const LumaFrame& frame, const BinConfig& cfg) {
  cfg.validate_frame(frame.width, frame.height);
  const int rows = cfg.rows(frame.height);
  const int cols = cfg.cols(frame.width);
  CellGrid grid(cols, rows, 0.0);
  // Integer sums keep the block mean exact.
  std::vector<long long> sums(static_cast<std::size_t>(cols), 0);
  for (int r = 0; r < rows; ++r) {
    std::fill(sums.begin(), sums.end(), 0);
    for (int y = r * cfg.m; y < (r + 1) * cfg.m; ++y) {
      const auto row = frame.row(y);
      for (int x = 0; x < frame.width; ++x) sums[static_cast<std::size_t>(x / cfg.n)] += row[static_cast<std::size_t>(x)];
    }
    const double count = static_cast<double>(cfg.m) * cfg.n;
    for (int c = 0; c < cols; ++c) grid.at(c, r) = static_cast<double>(sums[static_cast<std::size_t>(c)]) / count;
  }
  return grid;
}

SensoryGrid sensory_voltage(const CellGrid& prev, const CellGrid& curr, const BinConfig& cfg) {
  if (!prev.same_shape(curr)) fail(ErrorCode::kDimensionMismatch, "sensory grids differ in shape");
  cfg.validate();
  SensoryGrid out(curr.width, curr.height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = cfg.a * std::abs(curr.data[i] - prev.data[i]);
    out.data[i] = std::abs(v);  // rectifier stage; already non-negative
  }
  return out;
}

double modulate(double vhat, const ModulationConfig& cfg) {
  return vhat > cfg.v_up ? cfg.plus1 * (vhat - cfg.bia1) : cfg.plus2 * (vhat - cfg.bia2);
}

CellGrid modulate(const SensoryGrid& vhat, const ModulationConfig& cfg) {
  cfg.validate();
  CellGrid out(vhat.width, vhat.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = modulate(vhat.data[i], cfg);
  return out;
}

}  // namespace neuroflow
