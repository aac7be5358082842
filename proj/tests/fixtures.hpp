#pragma once

#include "neuroflow/pipeline.hpp"

namespace testing {

/// Textured 40x40 sprite drifting (3,1) px/frame over a 640x480 background.
inline neuroflow::SceneSpec sprite_scene_spec(int frames = 24) {
  neuroflow::SceneSpec s;
  s.width = 640;
  s.height = 480;
  s.frames = frames;
  s.seed = 3;
  neuroflow::SpriteSpec sp;
  sp.x0 = 100;
  sp.y0 = 200;
  sp.vx = 3;
  sp.vy = 1;
  s.sprites.push_back(sp);
  return s;
}

/// Pipeline settings for the sprite scenes: a higher sensory gain so a
/// textured edge crossing a cell fires, a slow reset so the pattern keeps
/// a trail over the whole sprite, and a tighter flow window so motion does
/// not bleed far past the sprite border.
inline neuroflow::PipelineConfig sprite_pipeline_config() {
  neuroflow::PipelineConfig c;
  c.bin.a = 4.0 / 255.0;
  c.memristor.alpha_reset = 0.125;
  neuroflow::FarnebackParams fb;
  fb.window_sigma = 1.5;
  fb.poly_n = 5;
  fb.poly_sigma = 1.1;
  c.backend = fb;
  c.segment.v_thresh = 50;
  return c;
}

}  // namespace testing
