#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tcpdm/ddpm.hpp"
#include "tcpdm/epipolar.hpp"
#include "tcpdm/patch.hpp"
#include "tcpdm/tensor.hpp"

namespace tcpdm {

/// (u, v) in frame i-1 matched to (u2, v2) in frame i.
struct Correspondence {
  int u = 0, v = 0, u2 = 0, v2 = 0;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

struct CorrespondenceSet {
  int height = 0;
  int width = 0;
  std::vector<Correspondence> matches;
  bool verification_skipped = false;

  std::size_t size() const { return matches.size(); }
};

/// One candidate per source pixel at round((u, v) + F[u, v]) with
/// half-away-from-zero rounding; targets outside the frame are dropped.
CorrespondenceSet flow_to_correspondences(const FlowField& flow);

/// Keeps the RANSAC inliers of a fundamental-matrix fit. Sets
/// verification_skipped and returns the input when there are fewer than 8
/// matches or the pair is near-static.
CorrespondenceSet geometric_verification(const CorrespondenceSet& corrs, const RansacConfig& cfg);

/// Decaying blend weight: every blend first applies w <- w * omega.
struct BlendWeight {
  double w = 1.0;
  double omega = 0.9;
};

enum class Collision {
  Average,  // average every source mapping to a target
  Last,     // last write in correspondence order wins
};

Collision parse_collision(const std::string& s);
std::string to_string(Collision c);

/// Decays the weight, then sets every corresponded target to
/// (1 - w') * x_hat[target] + w' * x_prev[source]. Pixels without a
/// correspondence keep x_hat exactly.
std::pair<FrameTensor, BlendWeight> temporal_blend(const FrameTensor& x_hat_curr,
                                                   const FrameTensor& x_prev,
                                                   const CorrespondenceSet& corrs, BlendWeight w,
                                                   Collision collision = Collision::Average);

struct TemporalConfig {
  double w_T = 1.0;
  double omega = 0.9;
  Collision collision = Collision::Average;
  bool verify = true;
  RansacConfig ransac;
};

struct TranslateConfig {
  PatchConfig patch;
  TemporalConfig temporal;
  std::uint64_t seed = 0;
};

struct VideoResult {
  std::vector<FrameTensor> frames;  // clamped to [-1, 1]
  int correspondence_computations = 0;
  std::vector<bool> verification_skipped;  // per frame pair
  std::vector<std::size_t> verified_matches;
};

/// X_{i,T} for frame i, drawn from its own stream.
FrameTensor initial_noise(const NoiseKey& key, int h, int w, int c);

/// Independent semantic-guided generation of one frame (no temporal blending),
/// using the same noise streams translate_video uses for that frame index.
FrameTensor translate_frame(const FrameTensor& ir, const SemanticLogits& logits, int frame_index,
                            const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                            const TranslateConfig& cfg);

/// Frame 0 runs the plain loop; each later frame blends every reverse step
/// against the previous frame's cached state at the same timestep, along
/// flow correspondences computed once per frame pair.
VideoResult translate_video(const std::vector<FrameTensor>& ir_frames,
                            const std::vector<SemanticLogits>& logits_per_frame,
                            const std::vector<FlowField>& flows, const NoisePredictor& denoiser,
                            const NoiseSchedule& schedule, const TranslateConfig& cfg);

}  // namespace tcpdm
