#include "tcpdm/denoiser.hpp"

#include <cmath>

namespace tcpdm {

DenoiserParams build_denoiser(const DenoiserConfig& config, Rng& rng) {
  const UNet<float> net(config);
  DenoiserParams out;
  out.config = config;
  out.params.resize(net.num_params());
  for (const auto& slot : net.layout().slots()) {
    auto block = out.params.segment(slot.offset, slot.size());
    switch (slot.init) {
      case InitKind::Zeros: block.setZero(); break;
      case InitKind::Ones: block.setOnes(); break;
      case InitKind::HeNormal: {
        const double stddev = std::sqrt(2.0 / static_cast<double>(slot.fan_in));
        for (auto& w : block) w = static_cast<float>(stddev * rng.normal());
        break;
      }
    }
  }
  out.ema = out.params;
  return out;
}

OptimizerState make_optimizer(const DenoiserParams& p, double lr) {
  OptimizerState opt;
  opt.m = Eigen::VectorXf::Zero(p.params.size());
  opt.v = Eigen::VectorXf::Zero(p.params.size());
  opt.lr = lr;
  return opt;
}

void ema_update(Eigen::VectorXf& ema, const Eigen::VectorXf& params, double momentum) {
  if (ema.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "ema vs params size");
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "ema momentum must lie in [0,1]");
  }
  ema = (momentum * ema.cast<double>() + (1.0 - momentum) * params.cast<double>()).cast<float>();
}

void adam_update(Eigen::VectorXf& params, const Eigen::VectorXf& grad, OptimizerState& opt) {
  if (grad.size() != params.size() || opt.m.size() != params.size() ||
      opt.v.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match params");
  }
  opt.step += 1;
  const auto b1 = static_cast<float>(opt.beta1);
  const auto b2 = static_cast<float>(opt.beta2);
  opt.m = b1 * opt.m + (1.0f - b1) * grad;
  opt.v = b2 * opt.v + (1.0f - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  const auto step = static_cast<float>(opt.lr / c1);
  const auto inv_c2 = static_cast<float>(1.0 / c2);
  const auto eps = static_cast<float>(opt.eps);
  params.array() -= step * opt.m.array() / ((opt.v.array() * inv_c2).sqrt() + eps);
}

FrameTensor Denoiser::predict_noise(const FrameTensor& x, const FrameTensor& y,
                                    const SemanticLogits& s, int t, bool use_ema) const {
  const auto in = assemble_input<float>(config(), x, y, s);
  const auto& w = use_ema ? params_.ema : params_.params;
  return to_frame(net_.forward(w.data(), in, t), config().patch_size);
}

NoisePredictor Denoiser::predictor(bool use_ema) const {
  return [this, use_ema](const FrameTensor& x, const FrameTensor& y, const SemanticLogits& s,
                         int t) { return predict_noise(x, y, s, t, use_ema); };
}

double train_step(Denoiser& denoiser, OptimizerState& opt, const TrainingBatch& batch,
                  const NoiseSchedule& schedule, Rng& rng) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "train_step on empty batch");
  const int p = denoiser.config().patch_size;
  std::vector<DiffusionDraw> draws;
  draws.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    draws.push_back(draw_diffusion_target(p, p, 3, schedule.T, rng));
  }
  Eigen::VectorXf grad;
  const double loss = loss_and_gradient(denoiser.net(), denoiser.params().params, batch, draws,
                                        schedule, grad);
  if (!std::isfinite(loss) || !grad.allFinite()) {
    throw Error(ErrorCode::NonFiniteLoss, "loss or gradient diverged");
  }
  adam_update(denoiser.params().params, grad, opt);
  return loss;
}

}  // namespace tcpdm
