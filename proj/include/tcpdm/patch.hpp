#pragma once

#include <cstdint>
#include <vector>

#include "tcpdm/ddpm.hpp"
#include "tcpdm/denoiser.hpp"
#include "tcpdm/rng.hpp"
#include "tcpdm/tensor.hpp"

namespace tcpdm {

struct PatchPosition {
  int u = 0;  // row of the top-left corner
  int v = 0;  // column of the top-left corner

  friend bool operator==(const PatchPosition&, const PatchPosition&) = default;
};

/// Sliding p x p windows stepped by the cell size r, row-major order.
struct PatchGrid {
  int height = 0;
  int width = 0;
  int patch = 0;
  int cell = 0;
  std::vector<PatchPosition> positions;

  std::size_t size() const { return positions.size(); }
};

/// Windows at (a*r, b*r) while they fit; when r does not divide H - p (or
/// W - p) one boundary-aligned row (column) at H - p (W - p) is appended so
/// every pixel is covered.
PatchGrid decompose(int H, int W, int p, int r);

/// Per-pixel number of windows covering it.
std::vector<int> coverage_counts(const PatchGrid& grid);

template <typename Scalar>
Tensor<Scalar> crop(const Tensor<Scalar>& src, PatchPosition pos, int p) {
  if (p < 1 || pos.u < 0 || pos.v < 0 || pos.u + p > src.height() || pos.v + p > src.width()) {
    throw Error(ErrorCode::OutOfBounds, "crop window outside " + src.shape_string());
  }
  const int C = src.channels();
  Tensor<Scalar> out(p, p, C);
  for (int i = 0; i < p; ++i) {
    const Scalar* row = src.data() + src.index(pos.u + i, pos.v, 0);
    std::copy(row, row + static_cast<std::ptrdiff_t>(p) * C, out.data() + out.index(i, 0, 0));
  }
  return out;
}

struct PatchSet {
  int patch = 0;
  std::vector<PatchPosition> positions;
  std::vector<FrameTensor> patches;
};

template <typename Scalar>
PatchSet crop_all(const Tensor<Scalar>& src, const PatchGrid& grid) {
  PatchSet set;
  set.patch = grid.patch;
  set.positions = grid.positions;
  set.patches.reserve(grid.size());
  for (const auto& pos : grid.positions) set.patches.push_back(crop(src, pos, grid.patch).template cast<float>());
  return set;
}

/// Coverage-weighted average of overlapping patches. Sums accumulate in
/// double with an integer count plane; division happens once at the end.
FrameTensor blend_spatial(const PatchSet& patches, int H, int W);

enum class BlendMode {
  Denoised,  // reverse step per patch with its own z, then blend the results
  Noise,     // blend predicted noise, then one full-image reverse step
};

BlendMode parse_blend_mode(const std::string& s);
std::string to_string(BlendMode m);

struct PatchConfig {
  int patch = 16;
  int cell = 8;
  BlendMode blend_mode = BlendMode::Denoised;
};

/// Identifies the noise streams of one frame. The z drawn for patch k at
/// step t comes from Rng::stream(seed, {frame, t, k}), so serial and
/// parallel evaluation agree.
struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint64_t frame = 0;
};

/// z for one patch (or for the whole image in noise-blend mode, where the
/// patch index is the grid size).
FrameTensor step_noise(const NoiseKey& key, int t, std::size_t patch_index, int h, int w, int c);

/// One semantic-guided reverse step over the whole frame: decompose
/// (x_t, Y, S) on the shared grid, denoise every patch conditionally, blend.
FrameTensor denoise_image_step(const FrameTensor& x_t, const FrameTensor& ir,
                               const SemanticLogits& logits, int t, const NoisePredictor& denoiser,
                               const NoiseSchedule& schedule, const PatchConfig& cfg,
                               const NoiseKey& key);

/// Full-resolution training frame.
struct TrainingFrame {
  FrameTensor vis;
  FrameTensor ir;
  SemanticLogits logits;
};

/// n_images frames (without replacement when the dataset is large enough),
/// patches_per_image aligned crops each at uniform random positions.
TrainingBatch random_patch_batch(const std::vector<TrainingFrame>& dataset, int n_images,
                                 int patches_per_image, int p, Rng& rng);

}  // namespace tcpdm
