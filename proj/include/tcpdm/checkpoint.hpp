#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tcpdm/denoiser.hpp"
#include "tcpdm/patch.hpp"
#include "tcpdm/synth.hpp"

namespace tcpdm {

/// key=value text, one pair per line.
std::map<std::string, std::string> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::map<std::string, std::string>& kv);

struct Checkpoint {
  DenoiserParams params;
  OptimizerState opt;
};

/// Directory with manifest.txt (config + optimizer scalars), params.tct,
/// ema.tct, adam_m.tct, adam_v.tct. Written to a sibling temp dir and
/// renamed into place so an interrupted save leaves the old one intact.
void save_checkpoint(const std::filesystem::path& dir, const DenoiserParams& params,
                     const OptimizerState& opt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// On-disk dataset: ir/ vis/ logits/ flow/ masks/ plus manifest.txt (H, W, N, L).
struct Dataset {
  int height = 0, width = 0, frames = 0, num_labels = 0;
  std::vector<FrameTensor> ir;
  std::vector<FrameTensor> vis;
  std::vector<SemanticLogits> logits;
  std::vector<FlowField> flows;

  std::vector<TrainingFrame> training_frames() const;
};

std::string frame_name(std::size_t index, const char* ext);

void write_dataset(const std::filesystem::path& dir, const SyntheticScene& scene, int num_labels);
Dataset load_dataset(const std::filesystem::path& dir);

/// Frames stored as `{i:05}.png` in a directory, converted to model range.
std::vector<FrameTensor> load_png_frames(const std::filesystem::path& dir);
std::vector<FlowField> load_flows(const std::filesystem::path& dir);

}  // namespace tcpdm
