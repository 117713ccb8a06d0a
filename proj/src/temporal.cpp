#include "tcpdm/temporal.hpp"

#include <algorithm>
#include <tuple>

namespace tcpdm {

CorrespondenceSet flow_to_correspondences(const FlowField& flow) {
  if (flow.channels() != 2) throw Error(ErrorCode::ShapeMismatch, "flow must have 2 channels");
  CorrespondenceSet set;
  set.height = flow.height();
  set.width = flow.width();
  set.matches.reserve(static_cast<std::size_t>(flow.height()) * flow.width());
  for (int u = 0; u < flow.height(); ++u) {
    for (int v = 0; v < flow.width(); ++v) {
      const long u2 = round_half_away(static_cast<double>(u) + flow(u, v, 0));
      const long v2 = round_half_away(static_cast<double>(v) + flow(u, v, 1));
      if (u2 < 0 || v2 < 0 || u2 >= flow.height() || v2 >= flow.width()) continue;
      set.matches.push_back({u, v, static_cast<int>(u2), static_cast<int>(v2)});
    }
  }
  return set;
}

CorrespondenceSet geometric_verification(const CorrespondenceSet& corrs, const RansacConfig& cfg) {
  std::vector<PointPair> pairs;
  pairs.reserve(corrs.size());
  for (const auto& c : corrs.matches) {
    pairs.push_back({Eigen::Vector2d(c.u, c.v), Eigen::Vector2d(c.u2, c.v2)});
  }
  const auto fit = ransac_fundamental(pairs, cfg);
  CorrespondenceSet out;
  out.height = corrs.height;
  out.width = corrs.width;
  out.verification_skipped = fit.skipped;
  if (fit.skipped) {
    out.matches = corrs.matches;
    return out;
  }
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (fit.inliers[i]) out.matches.push_back(corrs.matches[i]);
  }
  return out;
}

Collision parse_collision(const std::string& s) {
  if (s == "average") return Collision::Average;
  if (s == "last") return Collision::Last;
  throw Error(ErrorCode::InvalidConfig, "collision must be average | last, got " + s);
}

std::string to_string(Collision c) { return c == Collision::Average ? "average" : "last"; }

std::pair<FrameTensor, BlendWeight> temporal_blend(const FrameTensor& x_hat_curr,
                                                   const FrameTensor& x_prev,
                                                   const CorrespondenceSet& corrs, BlendWeight w,
                                                   Collision collision) {
  require_same_shape(x_hat_curr, x_prev, "temporal_blend");
  const int H = x_hat_curr.height(), W = x_hat_curr.width(), C = x_hat_curr.channels();
  for (const auto& m : corrs.matches) {
    if (m.u < 0 || m.v < 0 || m.u >= H || m.v >= W || m.u2 < 0 || m.v2 < 0 || m.u2 >= H ||
        m.v2 >= W) {
      throw Error(ErrorCode::OutOfBounds, "correspondence outside the frame");
    }
  }
  w.w *= w.omega;
  FrameTensor out = x_hat_curr;
  if (w.w == 0.0 || corrs.matches.empty()) return {out, w};
  const double wt = w.w;

  auto mix = [&](int u2, int v2, int c, double prev) {
    return static_cast<float>((1.0 - wt) * x_hat_curr(u2, v2, c) + wt * prev);
  };

  if (collision == Collision::Last) {
    for (const auto& m : corrs.matches)
      for (int c = 0; c < C; ++c) out(m.u2, m.v2, c) = mix(m.u2, m.v2, c, x_prev(m.u, m.v, c));
    return {out, w};
  }

  // Sorting makes the per-target sums independent of the input order.
  auto sorted = corrs.matches;
  std::sort(sorted.begin(), sorted.end(), [](const Correspondence& a, const Correspondence& b) {
    return std::tie(a.u2, a.v2, a.u, a.v) < std::tie(b.u2, b.v2, b.u, b.v);
  });
  std::vector<double> acc(C);
  for (std::size_t i = 0; i < sorted.size();) {
    const int u2 = sorted[i].u2, v2 = sorted[i].v2;
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t j = i;
    for (; j < sorted.size() && sorted[j].u2 == u2 && sorted[j].v2 == v2; ++j)
      for (int c = 0; c < C; ++c) acc[c] += x_prev(sorted[j].u, sorted[j].v, c);
    const double n = static_cast<double>(j - i);
    for (int c = 0; c < C; ++c) out(u2, v2, c) = mix(u2, v2, c, acc[c] / n);
    i = j;
  }
  return {out, w};
}

FrameTensor initial_noise(const NoiseKey& key, int h, int w, int c) {
  FrameTensor x(h, w, c);
  Rng rng = Rng::stream(key.seed, {key.frame, ~std::uint64_t{0}});
  fill_normal(x, rng);
  return x;
}

namespace {

void clamp_unit(FrameTensor& x) { x.array() = x.array().max(-1.0f).min(1.0f); }

void check_conditioning(const FrameTensor& ir, const SemanticLogits& logits) {
  if (ir.channels() != 1) throw Error(ErrorCode::ChannelMismatch, "infrared must be 1 channel");
  if (logits.height() != ir.height() || logits.width() != ir.width()) {
    throw Error(ErrorCode::ShapeMismatch, "logits and infrared differ in size");
  }
}

}  // namespace

FrameTensor translate_frame(const FrameTensor& ir, const SemanticLogits& logits, int frame_index,
                            const NoisePredictor& denoiser, const NoiseSchedule& schedule,
                            const TranslateConfig& cfg) {
  check_conditioning(ir, logits);
  const NoiseKey key{cfg.seed, static_cast<std::uint64_t>(frame_index)};
  FrameTensor x = initial_noise(key, ir.height(), ir.width(), 3);
  for (int t = schedule.T; t >= 1; --t) {
    x = denoise_image_step(x, ir, logits, t, denoiser, schedule, cfg.patch, key);
  }
  clamp_unit(x);
  return x;
}

VideoResult translate_video(const std::vector<FrameTensor>& ir_frames,
                            const std::vector<SemanticLogits>& logits_per_frame,
                            const std::vector<FlowField>& flows, const NoisePredictor& denoiser,
                            const NoiseSchedule& schedule, const TranslateConfig& cfg) {
  const std::size_t N = ir_frames.size();
  if (logits_per_frame.size() != N || (N > 0 && flows.size() != N - 1)) {
    throw Error(ErrorCode::LengthMismatch, "need N logit maps and N-1 flows for N frames");
  }
  VideoResult result;
  const int T = schedule.T;
  std::vector<FrameTensor> prev_traj, traj(static_cast<std::size_t>(T) + 1);

  for (std::size_t i = 0; i < N; ++i) {
    const auto& ir = ir_frames[i];
    check_conditioning(ir, logits_per_frame[i]);
    const NoiseKey key{cfg.seed, static_cast<std::uint64_t>(i)};
    CorrespondenceSet corrs;
    if (i > 0) {
      const auto& flow = flows[i - 1];
      if (flow.height() != ir.height() || flow.width() != ir.width()) {
        throw Error(ErrorCode::ShapeMismatch, "flow does not match frame size");
      }
      corrs = flow_to_correspondences(flow);
      if (cfg.temporal.verify) corrs = geometric_verification(corrs, cfg.temporal.ransac);
      ++result.correspondence_computations;
      result.verification_skipped.push_back(corrs.verification_skipped);
      result.verified_matches.push_back(corrs.size());
    }

    FrameTensor x = initial_noise(key, ir.height(), ir.width(), 3);
    traj[T] = x;
    BlendWeight w{cfg.temporal.w_T, cfg.temporal.omega};
    for (int t = T; t >= 1; --t) {
      x = denoise_image_step(x, ir, logits_per_frame[i], t, denoiser, schedule, cfg.patch, key);
      if (i > 0) std::tie(x, w) = temporal_blend(x, prev_traj[t - 1], corrs, w, cfg.temporal.collision);
      traj[t - 1] = x;
    }
    std::swap(prev_traj, traj);
    traj.resize(static_cast<std::size_t>(T) + 1);
    clamp_unit(x);
    result.frames.push_back(std::move(x));
  }
  return result;
}

}  // namespace tcpdm
