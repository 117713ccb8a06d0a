#include "tcpdm/patch.hpp"

#include <algorithm>
#include <numeric>

#include "tcpdm/parallel.hpp"

namespace tcpdm {

namespace {

std::vector<int> window_starts(int extent, int p, int r) {
  std::vector<int> starts;
  for (int a = 0; a + p <= extent; a += r) starts.push_back(a);
  if (starts.back() != extent - p) starts.push_back(extent - p);
  return starts;
}

}  // namespace

PatchGrid decompose(int H, int W, int p, int r) {
  if (p < 1 || p > H || p > W) {
    throw Error(ErrorCode::PatchTooLarge, "patch " + std::to_string(p) + " exceeds image " +
                                              std::to_string(H) + "x" + std::to_string(W));
  }
  if (r < 1 || r > p) throw Error(ErrorCode::InvalidConfig, "cell size must lie in [1, p]");
  PatchGrid g{H, W, p, r, {}};
  const auto us = window_starts(H, p, r);
  const auto vs = window_starts(W, p, r);
  g.positions.reserve(us.size() * vs.size());
  for (int u : us)
    for (int v : vs) g.positions.push_back({u, v});
  return g;
}

std::vector<int> coverage_counts(const PatchGrid& grid) {
  std::vector<int> count(static_cast<std::size_t>(grid.height) * grid.width, 0);
  for (const auto& pos : grid.positions)
    for (int i = 0; i < grid.patch; ++i)
      for (int j = 0; j < grid.patch; ++j) ++count[(pos.u + i) * grid.width + pos.v + j];
  return count;
}

FrameTensor blend_spatial(const PatchSet& set, int H, int W) {
  if (set.patches.empty() || set.patches.size() != set.positions.size()) {
    throw Error(ErrorCode::ShapeMismatch, "patch set is empty or inconsistent");
  }
  const int p = set.patch;
  const int C = set.patches.front().channels();
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(H) * W * C);
  std::vector<int> count(static_cast<std::size_t>(H) * W, 0);
  for (std::size_t k = 0; k < set.patches.size(); ++k) {
    const auto& patch = set.patches[k];
    const auto pos = set.positions[k];
    if (patch.height() != p || patch.width() != p || patch.channels() != C) {
      throw Error(ErrorCode::ShapeMismatch, "patch " + std::to_string(k) + " has wrong shape");
    }
    if (pos.u < 0 || pos.v < 0 || pos.u + p > H || pos.v + p > W) {
      throw Error(ErrorCode::OutOfBounds, "patch position outside the image");
    }
    for (int i = 0; i < p; ++i) {
      const Eigen::Index dst = (static_cast<Eigen::Index>(pos.u + i) * W + pos.v) * C;
      sum.segment(dst, static_cast<Eigen::Index>(p) * C) +=
          patch.array().segment(static_cast<Eigen::Index>(i) * p * C, static_cast<Eigen::Index>(p) * C).cast<double>();
      for (int j = 0; j < p; ++j) ++count[(pos.u + i) * W + pos.v + j];
    }
  }
  FrameTensor out(H, W, C);
  for (int px = 0; px < H * W; ++px) {
    if (count[px] == 0) {
      throw Error(ErrorCode::CoverageHole,
                  "pixel (" + std::to_string(px / W) + "," + std::to_string(px % W) + ") uncovered");
    }
    for (int c = 0; c < C; ++c) {
      out.data()[px * C + c] = static_cast<float>(sum[px * C + c] / count[px]);
    }
  }
  return out;
}

BlendMode parse_blend_mode(const std::string& s) {
  if (s == "denoised") return BlendMode::Denoised;
  if (s == "noise") return BlendMode::Noise;
  throw Error(ErrorCode::InvalidConfig, "blend_mode must be denoised | noise, got " + s);
}

std::string to_string(BlendMode m) { return m == BlendMode::Denoised ? "denoised" : "noise"; }

FrameTensor step_noise(const NoiseKey& key, int t, std::size_t patch_index, int h, int w, int c) {
  FrameTensor z(h, w, c);
  if (t <= 1) return z;
  Rng rng = Rng::stream(key.seed, {key.frame, static_cast<std::uint64_t>(t), patch_index});
  fill_normal(z, rng);
  return z;
}

FrameTensor denoise_image_step(const FrameTensor& x_t, const FrameTensor& ir,
                               const SemanticLogits& logits, int t, const NoisePredictor& denoiser,
                               const NoiseSchedule& schedule, const PatchConfig& cfg,
                               const NoiseKey& key) {
  const int H = x_t.height(), W = x_t.width();
  if (ir.height() != H || ir.width() != W || logits.height() != H || logits.width() != W) {
    throw Error(ErrorCode::ShapeMismatch, "x_t, infrared and logits must share H x W");
  }
  schedule.check_step(t);
  const auto grid = decompose(H, W, cfg.patch, cfg.cell);
  const int p = cfg.patch;

  PatchSet out;
  out.patch = p;
  out.positions = grid.positions;
  out.patches.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    const auto pos = grid.positions[k];
    const auto x = crop(x_t, pos, p);
    const auto eps = denoiser(x, crop(ir, pos, p), crop(logits, pos, p), t);
    if (cfg.blend_mode == BlendMode::Noise) {
      out.patches[k] = eps;
    } else {
      out.patches[k] = reverse_step(x, eps, t, step_noise(key, t, k, p, p, x.channels()), schedule);
    }
  });
  if (cfg.blend_mode == BlendMode::Denoised) return blend_spatial(out, H, W);

  const auto eps_full = blend_spatial(out, H, W);
  return reverse_step(x_t, eps_full, t, step_noise(key, t, grid.size(), H, W, x_t.channels()),
                      schedule);
}

TrainingBatch random_patch_batch(const std::vector<TrainingFrame>& dataset, int n_images,
                                 int patches_per_image, int p, Rng& rng) {
  if (dataset.empty() || n_images < 1 || patches_per_image < 1) {
    throw Error(ErrorCode::EmptyBatch, "nothing to sample");
  }
  for (const auto& f : dataset) {
    if (f.vis.height() < p || f.vis.width() < p) {
      throw Error(ErrorCode::ImageTooSmall, "image " + f.vis.shape_string() +
                                                " smaller than patch " + std::to_string(p));
    }
  }
  std::vector<std::size_t> picks;
  const auto n = dataset.size();
  if (static_cast<std::size_t>(n_images) <= n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int i = 0; i < n_images; ++i) {
      const int j = rng.uniform_int(i, static_cast<int>(n) - 1);
      std::swap(order[i], order[j]);
      picks.push_back(order[i]);
    }
  } else {
    for (int i = 0; i < n_images; ++i) picks.push_back(rng.uniform_int(0, static_cast<int>(n) - 1));
  }

  TrainingBatch batch;
  batch.reserve(static_cast<std::size_t>(n_images) * patches_per_image);
  for (auto idx : picks) {
    const auto& f = dataset[idx];
    for (int k = 0; k < patches_per_image; ++k) {
      const PatchPosition pos{rng.uniform_int(0, f.vis.height() - p),
                              rng.uniform_int(0, f.vis.width() - p)};
      batch.push_back({crop(f.vis, pos, p), crop(f.ir, pos, p), crop(f.logits, pos, p)});
    }
  }
  return batch;
}

}  // namespace tcpdm
