#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tcpdm/tensor.hpp"

namespace tcpdm {

enum class ShapeKind { Rectangle, Disk };

/// A flat-colored shape translating by an integer velocity per frame.
/// Rectangles are anchored at their top-left (u, v) with extent
/// (height, width); disks at their centre (u, v) with `radius`.
struct SceneShape {
  ShapeKind kind = ShapeKind::Rectangle;
  int u = 0, v = 0;
  int height = 1, width = 1;
  int radius = 1;
  int du = 0, dv = 0;
  std::array<float, 3> color{1.0f, 1.0f, 1.0f};  // visible RGB in [0, 1]
  float ir = 1.0f;                                // infrared intensity in [0, 1]
  int category = 1;
};

struct SyntheticSceneConfig {
  int height = 32;
  int width = 32;
  int frames = 6;
  int num_labels = 4;
  std::vector<SceneShape> shapes;
  std::array<float, 3> background_color{0.2f, 0.4f, 0.25f};
  float background_ir = 0.3f;
  int background_category = 0;
  /// Softmax temperature over one-hot category maps; 0 gives exact one-hot.
  double tau = 0.5;
  /// Std-dev of additive Gaussian infrared sensor noise, [0, 1] units.
  double ir_noise = 0.0;
  std::uint64_t seed = 0;
};

/// Frames are in model range [-1, 1]; flows[i] relates frame i to i+1.
struct SyntheticScene {
  std::vector<FrameTensor> ir;
  std::vector<FrameTensor> vis;
  std::vector<SemanticLogits> logits;
  std::vector<FlowField> flows;
  std::vector<Tensor<std::uint8_t>> masks;  // per-pixel category id
};

/// Renders shapes back to front (later shapes on top). Throws
/// ShapeOutOfFrame if any shape leaves the frame during the clip.
SyntheticScene synth_scene(const SyntheticSceneConfig& cfg);

/// softmax(onehot / tau) over num_labels categories.
SemanticLogits logits_from_mask(const Tensor<std::uint8_t>& mask, int num_labels, double tau);

/// Non-overlapping shapes with random sizes, colors and integer
/// velocities that stay inside the frame for the whole clip.
SyntheticSceneConfig random_scene_config(int height, int width, int frames, int num_labels,
                                         int num_shapes, std::uint64_t seed);

/// Two moving shapes on a 32x32 background, six frames, four labels.
SyntheticSceneConfig toy_scene_config();

}  // namespace tcpdm
