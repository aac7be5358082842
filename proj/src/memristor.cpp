#include "neuroflow/memristor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neuroflow/frame_io.hpp"

namespace neuroflow {

void MemristorParams::validate() const {
  require(alpha_set > 0.0 && alpha_reset > 0.0, "memristor rates must be positive");
  require(read_threshold > 0.0 && read_threshold < 1.0, "read threshold must lie in (0,1)");
  require(g_on > g_off && g_off > 0.0, "conductances must satisfy g_on > g_off > 0");
  require(pulse_width > 0.0, "pulse width must be positive");
}

double apply_pulse(double s, double v, const MemristorParams& params) {
  require(std::isfinite(v), "pulse voltage must be finite");
  double next = s;
  if (v > 0.0) {
    next = s + params.alpha_set * v * params.pulse_width * (1.0 - s);
  } else if (v < 0.0) {
    next = s + params.alpha_reset * v * params.pulse_width * s;
  }
  return std::clamp(next, 0.0, 1.0);
}

double device_current(double s, double v, const MemristorParams& params) {
  return (params.g_off + s * (params.g_on - params.g_off)) * v;
}

int reset_frame_bound(double s_hi, double v_static, const MemristorParams& params) {
  require(v_static < 0.0, "reset bound needs a negative static drive");
  const double theta = params.read_threshold;
  if (s_hi < theta) return 0;
  const double rate = params.alpha_reset * std::abs(v_static) * params.pulse_width;
  return std::max(1, static_cast<int>(std::ceil(std::log(s_hi / theta) / rate)));
}

MemristorArray::MemristorArray(int rows, int cols, MemristorParams params, double initial_state)
    : state_(cols, rows, initial_state), params_(params) {
  require(rows >= 1 && cols >= 1, "memristor array must have at least one cell");
  require(initial_state >= 0.0 && initial_state <= 1.0, "initial state must lie in [0,1]");
  params_.validate();
}

void MemristorArray::set_state(int row, int col, double s) {
  require(s >= 0.0 && s <= 1.0, "state must lie in [0,1]");
  state_.at(col, row) = s;
}

void MemristorArray::apply(const CellGrid& modulation) {
  if (!modulation.same_shape(state_))
    fail(ErrorCode::kDimensionMismatch, "modulation grid " + std::to_string(modulation.width) + "x" +
                                            std::to_string(modulation.height) + " does not match array " +
                                            std::to_string(cols()) + "x" + std::to_string(rows()));
  for (std::size_t i = 0; i < state_.size(); ++i) state_.data[i] = apply_pulse(state_.data[i], modulation.data[i], params_);
}

MotionPattern MemristorArray::read_pattern() const {
  MotionPattern pattern(cols(), rows());
  for (std::size_t i = 0; i < state_.size(); ++i) pattern.data[i] = state_.data[i] >= params_.read_threshold ? 1 : 0;
  return pattern;
}

MotionPattern MemristorArray::step_frame(const LumaFrame& prev, const LumaFrame& curr, const BinConfig& bin_cfg,
                                         const ModulationConfig& mod_cfg) {
  if (!prev.same_shape(curr)) fail(ErrorCode::kDimensionMismatch, "consecutive frames differ in size");
  if (curr.width != cols() * bin_cfg.n || curr.height != rows() * bin_cfg.m)
    fail(ErrorCode::kDimensionMismatch, "frame size does not match array size times bin size");
  return step_grids(bin_frame(prev, bin_cfg), bin_frame(curr, bin_cfg), bin_cfg, mod_cfg);
}

MotionPattern MemristorArray::step_grids(const CellGrid& prev, const CellGrid& curr, const BinConfig& bin_cfg,
                                         const ModulationConfig& mod_cfg) {
  apply(modulate(sensory_voltage(prev, curr, bin_cfg), mod_cfg));
  return read_pattern();
}

void MemristorArray::dump(const std::filesystem::path& path) const {
  LumaFrame img(cols(), rows());
  for (std::size_t i = 0; i < state_.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * state_.data[i]));
  write_pgm(img, path);
}

MemristorArray MemristorArray::load(const std::filesystem::path& path, MemristorParams params) {
  const LumaFrame img = read_pgm(path);
  MemristorArray array(img.height, img.width, params);
  for (std::size_t i = 0; i < img.size(); ++i) array.state_.data[i] = img.data[i] / 255.0;
  return array;
}

}  // namespace neuroflow
