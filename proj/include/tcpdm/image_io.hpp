#pragma once

#include <cstdint>
#include <filesystem>

#include "tcpdm/tensor.hpp"

namespace tcpdm {

using Image8 = Tensor<std::uint8_t>;

/// 8-bit grayscale or RGB PNG.
Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

/// x = 2 * (v / 255) - 1.
FrameTensor to_model_range(const Image8& image);
/// Clamps to [-1, 1], maps to [0, 255], rounds half away from zero.
Image8 from_model_range(const FrameTensor& x);

/// [-1, 1] -> [0, 1] without clamping.
template <typename Scalar>
Tensor<Scalar> to_unit_range(const Tensor<Scalar>& x) {
  Tensor<Scalar> out = x;
  out.array() = (x.array() + Scalar(1)) * Scalar(0.5);
  return out;
}

/// Full-range BT.601: Y = .299 R + .587 G + .114 B, Cb = .5 + .564 (B - Y),
/// Cr = .5 + .713 (R - Y). Input RGB in [0, 1].
template <typename Scalar>
Tensor<Scalar> rgb_to_ycbcr(const Tensor<Scalar>& rgb) {
  if (rgb.channels() != 3) throw Error(ErrorCode::ChannelMismatch, "rgb_to_ycbcr needs 3 channels");
  Tensor<Scalar> out(rgb.height(), rgb.width(), 3);
  const auto in = rgb.matrix();
  auto o = out.matrix();
  o.row(0) = Scalar(0.299) * in.row(0) + Scalar(0.587) * in.row(1) + Scalar(0.114) * in.row(2);
  o.row(1) = (in.row(2) - o.row(0)) * Scalar(0.564);
  o.row(1).array() += Scalar(0.5);
  o.row(2) = (in.row(0) - o.row(0)) * Scalar(0.713);
  o.row(2).array() += Scalar(0.5);
  return out;
}

template <typename Scalar>
Tensor<Scalar> ycbcr_to_rgb(const Tensor<Scalar>& ycc) {
  if (ycc.channels() != 3) throw Error(ErrorCode::ChannelMismatch, "ycbcr_to_rgb needs 3 channels");
  Tensor<Scalar> out(ycc.height(), ycc.width(), 3);
  const auto in = ycc.matrix();
  auto o = out.matrix();
  const auto y = in.row(0);
  const auto cb = (in.row(1).array() - Scalar(0.5)) / Scalar(0.564);
  const auto cr = (in.row(2).array() - Scalar(0.5)) / Scalar(0.713);
  o.row(2) = (y.array() + cb).matrix();
  o.row(0) = (y.array() + cr).matrix();
  o.row(1) = ((y.array() - Scalar(0.299) * o.row(0).array() - Scalar(0.114) * o.row(2).array()) /
              Scalar(0.587))
                 .matrix();
  return out;
}

/// Luminance plane of an RGB image; 1-channel inputs are returned unchanged.
template <typename Scalar>
Tensor<Scalar> luminance(const Tensor<Scalar>& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw Error(ErrorCode::ChannelMismatch, "luminance needs 1 or 3 channels");
  Tensor<Scalar> y(img.height(), img.width(), 1);
  const auto in = img.matrix();
  y.matrix() = Scalar(0.299) * in.row(0) + Scalar(0.587) * in.row(1) + Scalar(0.114) * in.row(2);
  return y;
}

}  // namespace tcpdm
