#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tcpdm/epipolar.hpp"
#include "tcpdm/tensor.hpp"

namespace tcpdm {

inline constexpr double kPsnrCapDb = 99.0;

struct MetricOptions {
  /// Compare all RGB channels instead of luminance. Debugging aid only.
  bool on_rgb = false;
};

/// 10 log10(1 / MSE) on the luminance of [0, 1] images, 99 dB when the
/// MSE is below 1e-10.
double psnr(const FrameTensor& a, const FrameTensor& b, MetricOptions opt = {});

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
/// C2 = 0.03^2, dynamic range 1, valid windows only.
double ssim(const FrameTensor& a, const FrameTensor& b, MetricOptions opt = {});

/// Mean over frame pairs of the MSE between frame i at flow targets and
/// frame i-1 at the sources. Pixels without a correspondence are excluded;
/// when `verify` is set the correspondences go through RANSAC first.
double warped_frame_error(const std::vector<FrameTensor>& frames, const std::vector<FlowField>& flows,
                          const std::optional<RansacConfig>& verify = std::nullopt);

struct MetricReport {
  std::vector<double> psnr_db;
  std::vector<double> ssim;
  double mean_psnr = 0, min_psnr = 0, mean_ssim = 0, min_ssim = 0;
  std::optional<double> warped_error;
  std::size_t frame_count = 0;

  std::string to_csv() const;
  std::string to_summary() const;
};

/// Frames in model range [-1, 1]; converted to [0, 1] before scoring.
MetricReport evaluate_frames(const std::vector<FrameTensor>& generated,
                             const std::vector<FrameTensor>& reference,
                             const std::vector<FlowField>* flows = nullptr);

}  // namespace tcpdm
