#pragma once

#include <Eigen/Core>

#include <vector>

#include "tcpdm/ddpm.hpp"
#include "tcpdm/parallel.hpp"
#include "tcpdm/rng.hpp"
#include "tcpdm/tensor.hpp"
#include "tcpdm/unet.hpp"

namespace tcpdm {

/// Network weights and their EMA shadow, both laid out per UNet::layout().
struct DenoiserParams {
  DenoiserConfig config;
  Eigen::VectorXf params;
  Eigen::VectorXf ema;
};

/// Adam with bias correction.
struct OptimizerState {
  Eigen::VectorXf m;
  Eigen::VectorXf v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One aligned training sample: visible x (p,p,3), infrared y (p,p,1),
/// logits s (p,p,L).
struct PatchTriple {
  FrameTensor x;
  FrameTensor y;
  SemanticLogits s;
};
using TrainingBatch = std::vector<PatchTriple>;

/// He-normal weights, zero biases, unit norm gains; ema = params.
DenoiserParams build_denoiser(const DenoiserConfig& config, Rng& rng);

OptimizerState make_optimizer(const DenoiserParams& p, double lr);

/// ema' = momentum * ema + (1 - momentum) * params.
void ema_update(Eigen::VectorXf& ema, const Eigen::VectorXf& params, double momentum);

void adam_update(Eigen::VectorXf& params, const Eigen::VectorXf& grad, OptimizerState& opt);

/// Planar network input [x | y (replicated if configured) | s].
template <typename S>
nn::Mat<S> assemble_input(const DenoiserConfig& cfg, const FrameTensor& x, const FrameTensor& y,
                          const SemanticLogits& s) {
  const int p = cfg.patch_size;
  auto check = [&](const FrameTensor& t, int ch, const char* what) {
    if (t.height() != p || t.width() != p || t.channels() != ch) {
      throw Error(ErrorCode::ShapeMismatch, std::string(what) + " patch is " + t.shape_string() +
                                                ", expected " + std::to_string(p) + "x" +
                                                std::to_string(p) + "x" + std::to_string(ch));
    }
  };
  check(x, 3, "visible");
  check(y, 1, "infrared");
  check(s, cfg.num_labels, "logits");
  const Eigen::Index n = static_cast<Eigen::Index>(p) * p;
  nn::Mat<S> in(n, cfg.in_channels());
  in.leftCols(3) = x.matrix().transpose().template cast<S>();
  for (int r = 0; r < cfg.ir_channels(); ++r) in.col(3 + r) = y.matrix().row(0).transpose().template cast<S>();
  if (cfg.num_labels > 0) in.rightCols(cfg.num_labels) = s.matrix().transpose().template cast<S>();
  return in;
}

/// Planar (p*p) x 3 back to an interleaved p x p x 3 tensor.
template <typename S>
FrameTensor to_frame(const nn::Mat<S>& planar, int p) {
  FrameTensor out(p, p, static_cast<int>(planar.cols()));
  out.matrix() = planar.transpose().template cast<float>();
  return out;
}

/// Mean-squared noise-prediction loss over a batch with fixed draws, and
/// its exact gradient accumulated into `grad` (resized and zeroed here).
/// Per-sample gradients are reduced in sample order, so the result does not
/// depend on the worker count.
template <typename S>
double loss_and_gradient(const UNet<S>& net, const nn::Vec<S>& params, const TrainingBatch& batch,
                         const std::vector<DiffusionDraw>& draws, const NoiseSchedule& schedule,
                         nn::Vec<S>& grad) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "empty training batch");
  if (draws.size() != batch.size()) throw Error(ErrorCode::ShapeMismatch, "draw count != batch");
  const auto& cfg = net.config();
  const int p = cfg.patch_size;
  const double count = static_cast<double>(batch.size()) * p * p * 3;
  const auto n = static_cast<std::size_t>(batch.size());
  const bool split = effective_threads() > 1 && n > 1;
  std::vector<nn::Vec<S>> per_sample(split ? n : 0);
  std::vector<double> sq(n, 0.0);
  grad = nn::Vec<S>::Zero(net.num_params());

  auto run = [&](std::size_t i, S* G) {
    const auto& tr = batch[i];
    const auto x_t = forward_sample(tr.x.template cast<S>(), draws[i].t,
                                    draws[i].eps.template cast<S>(), schedule);
    FrameTensor x_t_f = x_t.template cast<float>();
    nn::Mat<S> in = assemble_input<S>(cfg, x_t_f, tr.y, tr.s);
    // keep full precision of x_t for the double-precision path
    in.leftCols(3) = x_t.matrix().transpose();
    typename UNet<S>::Tape tape;
    const nn::Mat<S> pred = net.forward(params.data(), in, draws[i].t, tape);
    const nn::Mat<S> diff = pred - draws[i].eps.matrix().transpose().template cast<S>();
    sq[i] = diff.template cast<double>().squaredNorm();
    const nn::Mat<S> d_out = diff * static_cast<S>(2.0 / count);
    net.backward(params.data(), tape, d_out, G);
  };

  if (split) {
    parallel_for(n, [&](std::size_t i) {
      per_sample[i] = nn::Vec<S>::Zero(net.num_params());
      run(i, per_sample[i].data());
    });
    for (const auto& g : per_sample) grad += g;
  } else {
    for (std::size_t i = 0; i < n; ++i) run(i, grad.data());
  }
  double total = 0.0;
  for (double v : sq) total += v;
  return total / count;
}

/// Float network plus its parameters; the unit the pipeline samples with.
class Denoiser {
 public:
  explicit Denoiser(DenoiserParams params) : net_(params.config), params_(std::move(params)) {}

  const DenoiserConfig& config() const { return params_.config; }
  const UNet<float>& net() const { return net_; }
  DenoiserParams& params() { return params_; }
  const DenoiserParams& params() const { return params_; }

  /// Deterministic forward pass on [x | y | s]; reads ema weights when use_ema.
  FrameTensor predict_noise(const FrameTensor& x, const FrameTensor& y, const SemanticLogits& s,
                            int t, bool use_ema = false) const;

  /// Adapter for the sampling code.
  NoisePredictor predictor(bool use_ema) const;

 private:
  UNet<float> net_;
  DenoiserParams params_;
};

/// Draws (t, eps) per triple, backpropagates, applies one Adam step and
/// returns the pre-update loss. Throws NonFiniteLoss without touching state.
double train_step(Denoiser& denoiser, OptimizerState& opt, const TrainingBatch& batch,
                  const NoiseSchedule& schedule, Rng& rng);

}  // namespace tcpdm
