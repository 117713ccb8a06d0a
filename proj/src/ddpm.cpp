#include "tcpdm/ddpm.hpp"

#include <cmath>

namespace tcpdm {

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > T) {
    throw Error(ErrorCode::StepOutOfRange,
                "t = " + std::to_string(t) + " outside [1, " + std::to_string(T) + "]");
  }
}

NoiseSchedule make_schedule(const std::vector<double>& betas, SigmaMode mode) {
  if (betas.empty()) throw Error(ErrorCode::InvalidSchedule, "empty beta list");
  NoiseSchedule s;
  s.T = static_cast<int>(betas.size());
  s.sigma_mode = mode;
  s.betas.assign(1, 0.0);
  s.alphas.assign(1, 1.0);
  s.alpha_bars.assign(1, 1.0);
  s.sigmas.assign(1, 0.0);
  for (int t = 1; t <= s.T; ++t) {
    const double b = betas[t - 1];
    if (!(b > 0.0 && b < 1.0)) {
      throw Error(ErrorCode::InvalidSchedule, "beta_" + std::to_string(t) + " not in (0,1)");
    }
    s.betas.push_back(b);
    s.alphas.push_back(1.0 - b);
    s.alpha_bars.push_back(s.alpha_bars.back() * (1.0 - b));
    if (mode == SigmaMode::Beta) {
      s.sigmas.push_back(std::sqrt(b));
    } else {
      // posterior variance (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t
      const double tilde = (1.0 - s.alpha_bars[t - 1]) / (1.0 - s.alpha_bars[t]) * b;
      s.sigmas.push_back(std::sqrt(tilde));
    }
  }
  return s;
}

NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end, SigmaMode mode) {
  if (T < 1) throw Error(ErrorCode::InvalidSchedule, "T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw Error(ErrorCode::InvalidSchedule, "need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(T);
  for (int i = 0; i < T; ++i) {
    betas[i] = T == 1 ? beta_start
                      : beta_start + (beta_end - beta_start) * static_cast<double>(i) / (T - 1);
  }
  betas.back() = T == 1 ? beta_start : beta_end;
  return make_schedule(betas, mode);
}

SigmaMode parse_sigma_mode(const std::string& s) {
  if (s == "beta") return SigmaMode::Beta;
  if (s == "beta_tilde") return SigmaMode::BetaTilde;
  throw Error(ErrorCode::InvalidConfig, "sigma_mode must be beta | beta_tilde, got " + s);
}

std::string to_string(SigmaMode m) { return m == SigmaMode::Beta ? "beta" : "beta_tilde"; }

DiffusionDraw draw_diffusion_target(int height, int width, int channels, int T, Rng& rng) {
  DiffusionDraw d;
  d.t = rng.uniform_int(1, T);
  d.eps = FrameTensor(height, width, channels);
  fill_normal(d.eps, rng);
  return d;
}

double training_loss(const std::vector<FrameTensor>& x0_patches,
                     const std::vector<FrameTensor>& ir_patches,
                     const std::vector<SemanticLogits>& logit_patches, const NoisePredictor& denoiser,
                     const NoiseSchedule& s, Rng& rng) {
  if (x0_patches.empty()) throw Error(ErrorCode::EmptyBatch, "training_loss on empty batch");
  if (ir_patches.size() != x0_patches.size() || logit_patches.size() != x0_patches.size()) {
    throw Error(ErrorCode::ShapeMismatch, "patch set sizes differ");
  }
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < x0_patches.size(); ++i) {
    const auto& x0 = x0_patches[i];
    if (ir_patches[i].height() != x0.height() || ir_patches[i].width() != x0.width() ||
        logit_patches[i].height() != x0.height() || logit_patches[i].width() != x0.width()) {
      throw Error(ErrorCode::ShapeMismatch, "conditioning patch spatial size differs");
    }
    const auto draw = draw_diffusion_target(x0.height(), x0.width(), x0.channels(), s.T, rng);
    const auto x_t = forward_sample(x0, draw.t, draw.eps, s);
    const auto pred = denoiser(x_t, ir_patches[i], logit_patches[i], draw.t);
    require_same_shape(pred, draw.eps, "denoiser output");
    sum += (pred.array().template cast<double>() - draw.eps.array().template cast<double>())
               .square()
               .sum();
    count += static_cast<double>(x0.size());
  }
  return sum / count;
}

}  // namespace tcpdm
