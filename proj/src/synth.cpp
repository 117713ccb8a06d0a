#include "tcpdm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tcpdm/rng.hpp"

namespace tcpdm {

namespace {

struct Box {
  int u0, v0, u1, v1;  // inclusive bounds
};

Box bounds_at(const SceneShape& s, int frame) {
  const int u = s.u + frame * s.du, v = s.v + frame * s.dv;
  if (s.kind == ShapeKind::Rectangle) return {u, v, u + s.height - 1, v + s.width - 1};
  return {u - s.radius, v - s.radius, u + s.radius, v + s.radius};
}

bool covers(const SceneShape& s, int frame, int pu, int pv) {
  const int u = s.u + frame * s.du, v = s.v + frame * s.dv;
  if (s.kind == ShapeKind::Rectangle) {
    return pu >= u && pu < u + s.height && pv >= v && pv < v + s.width;
  }
  const int a = pu - u, b = pv - v;
  return a * a + b * b <= s.radius * s.radius;
}

float to_model(float x) { return 2.0f * x - 1.0f; }

}  // namespace

SemanticLogits logits_from_mask(const Tensor<std::uint8_t>& mask, int num_labels, double tau) {
  SemanticLogits out(mask.height(), mask.width(), num_labels);
  // softmax(onehot / tau): hit = 1 / (1 + (L-1) e^{-1/tau}), miss = e^{-1/tau} * hit
  const double e = tau > 0.0 ? std::exp(-1.0 / tau) : 0.0;
  const double hit = 1.0 / (1.0 + (num_labels - 1) * e);
  const auto miss = static_cast<float>(e * hit);
  out.array().setConstant(miss);
  for (int u = 0; u < mask.height(); ++u)
    for (int v = 0; v < mask.width(); ++v) out(u, v, mask(u, v, 0)) = static_cast<float>(hit);
  return out;
}

SyntheticScene synth_scene(const SyntheticSceneConfig& cfg) {
  if (cfg.frames < 1 || cfg.height < 1 || cfg.width < 1) {
    throw Error(ErrorCode::InvalidConfig, "scene needs H, W, N >= 1");
  }
  if (cfg.num_labels < 1 || cfg.num_labels > 256 || cfg.background_category >= cfg.num_labels) {
    throw Error(ErrorCode::InvalidConfig, "background category must be < L <= 256");
  }
  for (std::size_t k = 0; k < cfg.shapes.size(); ++k) {
    const auto& s = cfg.shapes[k];
    if (s.category < 0 || s.category >= cfg.num_labels) {
      throw Error(ErrorCode::InvalidConfig, "shape category must be < L");
    }
    for (int f = 0; f < cfg.frames; ++f) {
      const auto b = bounds_at(s, f);
      if (b.u0 < 0 || b.v0 < 0 || b.u1 >= cfg.height || b.v1 >= cfg.width) {
        throw Error(ErrorCode::ShapeOutOfFrame,
                    "shape " + std::to_string(k) + " leaves the frame at frame " + std::to_string(f));
      }
    }
  }

  SyntheticScene scene;
  const int H = cfg.height, W = cfg.width;
  std::vector<std::vector<int>> owner(cfg.frames, std::vector<int>(static_cast<std::size_t>(H) * W, -1));
  for (int f = 0; f < cfg.frames; ++f) {
    FrameTensor ir(H, W, 1), vis(H, W, 3);
    Tensor<std::uint8_t> mask(H, W, 1);
    Rng noise = Rng::stream(cfg.seed, {static_cast<std::uint64_t>(f)});
    for (int u = 0; u < H; ++u) {
      for (int v = 0; v < W; ++v) {
        int top = -1;
        for (std::size_t k = 0; k < cfg.shapes.size(); ++k)
          if (covers(cfg.shapes[k], f, u, v)) top = static_cast<int>(k);
        owner[f][u * W + v] = top;
        const auto& color = top < 0 ? cfg.background_color : cfg.shapes[top].color;
        float intensity = top < 0 ? cfg.background_ir : cfg.shapes[top].ir;
        if (cfg.ir_noise > 0.0) intensity += static_cast<float>(cfg.ir_noise * noise.normal());
        ir(u, v, 0) = to_model(std::clamp(intensity, 0.0f, 1.0f));
        for (int c = 0; c < 3; ++c) vis(u, v, c) = to_model(color[c]);
        mask(u, v, 0) = static_cast<std::uint8_t>(top < 0 ? cfg.background_category
                                                          : cfg.shapes[top].category);
      }
    }
    scene.logits.push_back(logits_from_mask(mask, cfg.num_labels, cfg.tau));
    scene.ir.push_back(std::move(ir));
    scene.vis.push_back(std::move(vis));
    scene.masks.push_back(std::move(mask));
  }
  for (int f = 0; f + 1 < cfg.frames; ++f) {
    FlowField flow(H, W, 2);
    for (int px = 0; px < H * W; ++px) {
      const int k = owner[f][px];
      if (k < 0) continue;
      flow.data()[px * 2] = static_cast<float>(cfg.shapes[k].du);
      flow.data()[px * 2 + 1] = static_cast<float>(cfg.shapes[k].dv);
    }
    scene.flows.push_back(std::move(flow));
  }
  return scene;
}

SyntheticSceneConfig random_scene_config(int height, int width, int frames, int num_labels,
                                         int num_shapes, std::uint64_t seed) {
  SyntheticSceneConfig cfg;
  cfg.height = height;
  cfg.width = width;
  cfg.frames = frames;
  cfg.num_labels = num_labels;
  cfg.seed = seed;
  Rng rng(seed);
  cfg.background_color = {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                          static_cast<float>(rng.uniform())};
  cfg.background_ir = static_cast<float>(0.1 + 0.3 * rng.uniform());
  auto overlaps = [&](const SceneShape& a, const SceneShape& b) {
    for (int f = 0; f < frames; ++f) {
      const auto x = bounds_at(a, f), y = bounds_at(b, f);
      if (x.u0 <= y.u1 && y.u0 <= x.u1 && x.v0 <= y.v1 && y.v0 <= x.v1) return true;
    }
    return false;
  };
  const int max_extent = std::max(2, std::min(height, width) / 3);
  for (int attempt = 0; attempt < 1000 && static_cast<int>(cfg.shapes.size()) < num_shapes; ++attempt) {
    SceneShape s;
    s.kind = rng.uniform() < 0.5 ? ShapeKind::Rectangle : ShapeKind::Disk;
    s.height = rng.uniform_int(2, max_extent);
    s.width = rng.uniform_int(2, max_extent);
    s.radius = rng.uniform_int(1, std::max(1, max_extent / 2));
    s.du = rng.uniform_int(-1, 1);
    s.dv = rng.uniform_int(-2, 2);
    s.u = rng.uniform_int(0, height - 1);
    s.v = rng.uniform_int(0, width - 1);
    s.color = {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
               static_cast<float>(rng.uniform())};
    s.ir = static_cast<float>(0.5 + 0.5 * rng.uniform());
    s.category = num_labels > 1 ? rng.uniform_int(1, num_labels - 1) : 0;
    bool ok = true;
    for (int f = 0; f < frames && ok; ++f) {
      const auto b = bounds_at(s, f);
      ok = b.u0 >= 0 && b.v0 >= 0 && b.u1 < height && b.v1 < width;
    }
    for (const auto& other : cfg.shapes) ok = ok && !overlaps(s, other);
    if (ok) cfg.shapes.push_back(s);
  }
  return cfg;
}

SyntheticSceneConfig toy_scene_config() {
  SyntheticSceneConfig cfg;
  cfg.height = 32;
  cfg.width = 32;
  cfg.frames = 6;
  cfg.num_labels = 4;
  cfg.tau = 0.5;
  SceneShape rect;
  rect.kind = ShapeKind::Rectangle;
  rect.u = 4;
  rect.v = 2;
  rect.height = 10;
  rect.width = 8;
  rect.du = 0;
  rect.dv = 2;
  rect.color = {0.85f, 0.2f, 0.15f};
  rect.ir = 0.9f;
  rect.category = 1;
  SceneShape disk;
  disk.kind = ShapeKind::Disk;
  disk.u = 24;
  disk.v = 22;
  disk.radius = 5;
  disk.du = 0;
  disk.dv = -2;
  disk.color = {0.2f, 0.3f, 0.9f};
  disk.ir = 0.6f;
  disk.category = 2;
  cfg.shapes = {rect, disk};
  return cfg;
}

}  // namespace tcpdm
