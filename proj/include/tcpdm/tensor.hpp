#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "tcpdm/error.hpp"

namespace tcpdm {

/// Dense H x W x C image, row-major with channels innermost.
///
/// Element (u, v, c) lives at ((u * W) + v) * C + c, so the storage is
/// exactly a column-major C x (H*W) matrix; `matrix()` exposes that view
/// without copying, which is what the network layers operate on.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>;
  using ConstMatrixMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>;

  Tensor() = default;
  Tensor(int height, int width, int channels) : h_(height), w_(width), c_(channels) {
    if (height < 1 || width < 1 || channels < 1) {
      throw Error(ErrorCode::ShapeMismatch,
                  "tensor dims must be >= 1, got " + shape_string(height, width, channels));
    }
    data_ = Array::Zero(static_cast<Eigen::Index>(height) * width * channels);
  }

  static Tensor constant(int height, int width, int channels, Scalar value) {
    Tensor t(height, width, channels);
    t.data_.setConstant(value);
    return t;
  }

  int height() const noexcept { return h_; }
  int width() const noexcept { return w_; }
  int channels() const noexcept { return c_; }
  Eigen::Index size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.size() == 0; }

  Scalar& operator()(int u, int v, int c) { return data_[index(u, v, c)]; }
  Scalar operator()(int u, int v, int c) const { return data_[index(u, v, c)]; }

  Eigen::Index index(int u, int v, int c) const noexcept {
    return (static_cast<Eigen::Index>(u) * w_ + v) * c_ + c;
  }

  Array& array() noexcept { return data_; }
  const Array& array() const noexcept { return data_; }
  Scalar* data() noexcept { return data_.data(); }
  const Scalar* data() const noexcept { return data_.data(); }

  MatrixMap matrix() { return MatrixMap(data_.data(), c_, static_cast<Eigen::Index>(h_) * w_); }
  ConstMatrixMap matrix() const {
    return ConstMatrixMap(data_.data(), c_, static_cast<Eigen::Index>(h_) * w_);
  }

  bool same_shape(const Tensor& other) const noexcept {
    return h_ == other.h_ && w_ == other.w_ && c_ == other.c_;
  }

  bool all_finite() const { return data_.isFinite().all(); }

  std::string shape_string() const { return shape_string(h_, w_, c_); }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(h_, w_, c_);
    out.array() = data_.template cast<Other>();
    return out;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) && (a.data_ == b.data_).all();
  }

 private:
  static std::string shape_string(int h, int w, int c) {
    return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
  }

  int h_ = 0;
  int w_ = 0;
  int c_ = 0;
  Array data_;
};

using FrameTensor = Tensor<float>;
/// H x W x L per-pixel category distribution.
using SemanticLogits = Tensor<float>;
/// H x W x 2, channel 0 = row displacement, channel 1 = column displacement.
using FlowField = Tensor<float>;

template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

/// Half-away-from-zero rounding, the convention used everywhere pixels are
/// snapped (correspondences, 8-bit export).
inline long round_half_away(double x) noexcept { return std::lround(x); }

}  // namespace tcpdm
