#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace tcpdm {

/// A match x <-> x' in pixel coordinates (row, column).
struct PointPair {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

/// 3x3 rank-2 matrix with x'^T F x = 0, stored with unit Frobenius norm.
struct FundamentalMatrix {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
};

/// Normalized eight-point algorithm: Hartley conditioning, least-squares
/// null vector of the n x 9 design matrix, rank-2 projection,
/// denormalization. Throws DegenerateConfiguration when the design matrix
/// has rank < 8.
FundamentalMatrix estimate_fundamental_8pt(std::span<const PointPair> pairs);

/// First-order geometric residual (x'^T F x)^2 / (|Fx|_12^2 + |F^T x'|_12^2);
/// +inf when the denominator vanishes.
double sampson_distance(const Eigen::Matrix3d& F, const Eigen::Vector2d& x,
                        const Eigen::Vector2d& x_prime);

struct RansacConfig {
  int max_iterations = 1000;
  double threshold = 1.0;  // Sampson distance, px^2
  double confidence = 0.999;
  double min_motion = 0.5;  // mean displacement below which verification is skipped
  std::uint64_t seed = 0;
};

struct RansacResult {
  std::vector<bool> inliers;
  FundamentalMatrix model;
  std::size_t inlier_count = 0;
  int iterations = 0;
  bool skipped = false;
};

/// RANSAC over random minimal 8-subsets. Iteration i draws its sample from
/// Rng::stream(seed, {i}); the first model reaching the maximal consensus
/// wins. Skips (all inliers, skipped = true) when there are fewer than 8
/// pairs, the mean displacement is below min_motion, or no sample yields a
/// model.
RansacResult ransac_fundamental(std::span<const PointPair> pairs, const RansacConfig& cfg);

}  // namespace tcpdm
