#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tcpdm/rng.hpp"
#include "tcpdm/tensor.hpp"

namespace tcpdm {

enum class SigmaMode { Beta, BetaTilde };

/// Variance schedule for T steps. Arrays are stored 1-based: index 0 holds
/// the t = 0 convention (beta = 0, alpha = alpha_bar = 1, sigma = 0).
struct NoiseSchedule {
  int T = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;
  std::vector<double> sigmas;
  SigmaMode sigma_mode = SigmaMode::Beta;

  double beta(int t) const { return betas.at(t); }
  double alpha(int t) const { return alphas.at(t); }
  double alpha_bar(int t) const { return alpha_bars.at(t); }
  double sigma(int t) const { return sigmas.at(t); }

  void check_step(int t) const;
};

/// Builds a schedule from explicit betas (t = 1..T order).
NoiseSchedule make_schedule(const std::vector<double>& betas, SigmaMode mode = SigmaMode::Beta);

/// Betas linearly spaced from beta_start to beta_end, both inclusive.
NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end,
                                   SigmaMode mode = SigmaMode::Beta);

SigmaMode parse_sigma_mode(const std::string& s);
std::string to_string(SigmaMode m);

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
template <typename Scalar>
Tensor<Scalar> forward_sample(const Tensor<Scalar>& x0, int t, const Tensor<Scalar>& eps,
                              const NoiseSchedule& s) {
  require_same_shape(x0, eps, "forward_sample");
  s.check_step(t);
  const auto a = static_cast<Scalar>(std::sqrt(s.alpha_bar(t)));
  const auto b = static_cast<Scalar>(std::sqrt(1.0 - s.alpha_bar(t)));
  Tensor<Scalar> out(x0.height(), x0.width(), x0.channels());
  out.array() = a * x0.array() + b * eps.array();
  return out;
}

/// One ancestral step:
///   x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_pred) / sqrt(alpha_t) + sigma_t z.
/// The caller decides z; the sampler passes z = 0 at t = 1.
template <typename Scalar>
Tensor<Scalar> reverse_step(const Tensor<Scalar>& x_t, const Tensor<Scalar>& eps_pred, int t,
                            const Tensor<Scalar>& z, const NoiseSchedule& s) {
  require_same_shape(x_t, eps_pred, "reverse_step eps_pred");
  require_same_shape(x_t, z, "reverse_step z");
  s.check_step(t);
  const double one_minus_ab = 1.0 - s.alpha_bar(t);
  const auto inv_sqrt_alpha = static_cast<Scalar>(1.0 / std::sqrt(s.alpha(t)));
  const auto eps_coef =
      static_cast<Scalar>(one_minus_ab > 0.0 ? s.beta(t) / std::sqrt(one_minus_ab) : 0.0);
  const auto sigma = static_cast<Scalar>(s.sigma(t));
  Tensor<Scalar> out(x_t.height(), x_t.width(), x_t.channels());
  out.array() = inv_sqrt_alpha * (x_t.array() - eps_coef * eps_pred.array()) + sigma * z.array();
  return out;
}

/// Noise-prediction callable: (x_t, infrared, logits, t) -> predicted eps.
using NoisePredictor = std::function<FrameTensor(const FrameTensor&, const FrameTensor&,
                                                 const SemanticLogits&, int)>;

/// One (t, eps) draw for a training patch.
struct DiffusionDraw {
  int t = 1;
  FrameTensor eps;
};

/// Draw order contract: t ~ U{1..T} first, then eps element by element in
/// storage order. Training code and tests replay draws through this.
DiffusionDraw draw_diffusion_target(int height, int width, int channels, int T, Rng& rng);

/// Mean squared error between eps and the prediction on x_t, averaged over
/// every element of every patch in the batch.
double training_loss(const std::vector<FrameTensor>& x0_patches,
                     const std::vector<FrameTensor>& ir_patches,
                     const std::vector<SemanticLogits>& logit_patches, const NoisePredictor& denoiser,
                     const NoiseSchedule& s, Rng& rng);

}  // namespace tcpdm
