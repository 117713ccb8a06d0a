#include "tcpdm/epipolar.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numeric>

#include "tcpdm/error.hpp"
#include "tcpdm/rng.hpp"

namespace tcpdm {

namespace {

Eigen::Matrix3d hartley_transform(std::span<const PointPair> pairs, bool second) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pairs) centroid += second ? p.b : p.a;
  centroid /= static_cast<double>(pairs.size());
  double mean_dist = 0.0;
  for (const auto& p : pairs) mean_dist += ((second ? p.b : p.a) - centroid).norm();
  mean_dist /= static_cast<double>(pairs.size());
  if (mean_dist <= 0.0) throw Error(ErrorCode::DegenerateConfiguration, "coincident points");
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d T;
  T << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return T;
}

}  // namespace

FundamentalMatrix estimate_fundamental_8pt(std::span<const PointPair> pairs) {
  if (pairs.size() < 8) {
    throw Error(ErrorCode::DegenerateConfiguration, "need at least 8 correspondences");
  }
  const Eigen::Matrix3d T1 = hartley_transform(pairs, false);
  const Eigen::Matrix3d T2 = hartley_transform(pairs, true);

  Eigen::Matrix<double, Eigen::Dynamic, 9> A(static_cast<Eigen::Index>(pairs.size()), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d x = T1 * pairs[i].a.homogeneous();
    const Eigen::Vector3d y = T2 * pairs[i].b.homogeneous();
    // row . vec_rowmajor(F) = y^T F x
    A.row(static_cast<Eigen::Index>(i)) << y.x() * x.x(), y.x() * x.y(), y.x() * x.z(),
        y.y() * x.x(), y.y() * x.y(), y.y() * x.z(), y.z() * x.x(), y.z() * x.y(), y.z() * x.z();
  }

  Eigen::Matrix<double, 9, 1> f;
  Eigen::VectorXd sv;
  if (A.rows() >= 9) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
    sv = svd.singularValues();
    f = svd.matrixV().col(8);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    sv = svd.singularValues();
    f = svd.matrixV().col(8);
  }
  if (sv.size() < 8 || sv[7] <= 1e-10 * sv[0]) {
    throw Error(ErrorCode::DegenerateConfiguration, "design matrix rank < 8");
  }

  Eigen::Matrix3d Fn;
  Fn << f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8];
  Eigen::JacobiSVD<Eigen::Matrix3d> fsvd(Fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = fsvd.singularValues();
  s[2] = 0.0;
  Fn = fsvd.matrixU() * s.asDiagonal() * fsvd.matrixV().transpose();

  FundamentalMatrix out;
  out.m = T2.transpose() * Fn * T1;
  out.m /= out.m.norm();
  return out;
}

double sampson_distance(const Eigen::Matrix3d& F, const Eigen::Vector2d& x,
                        const Eigen::Vector2d& x_prime) {
  const Eigen::Vector3d xh = x.homogeneous();
  const Eigen::Vector3d yh = x_prime.homogeneous();
  const Eigen::Vector3d Fx = F * xh;
  const Eigen::Vector3d Fty = F.transpose() * yh;
  const double num = yh.dot(Fx);
  const double den = Fx.x() * Fx.x() + Fx.y() * Fx.y() + Fty.x() * Fty.x() + Fty.y() * Fty.y();
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return num * num / den;
}

RansacResult ransac_fundamental(std::span<const PointPair> pairs, const RansacConfig& cfg) {
  RansacResult result;
  const std::size_t n = pairs.size();
  auto skip = [&] {
    result.inliers.assign(n, true);
    result.inlier_count = n;
    result.skipped = true;
    return result;
  };
  if (n < 8) return skip();
  double motion = 0.0;
  for (const auto& p : pairs) motion += (p.b - p.a).norm();
  if (motion / static_cast<double>(n) < cfg.min_motion) return skip();

  std::vector<int> order(n);
  std::vector<PointPair> sample(8);
  std::size_t best_count = 0;
  bool found = false;
  double needed = cfg.max_iterations;
  int iter = 0;
  for (; iter < cfg.max_iterations && iter < needed; ++iter) {
    Rng rng = Rng::stream(cfg.seed, {static_cast<std::uint64_t>(iter)});
    std::iota(order.begin(), order.end(), 0);
    for (int k = 0; k < 8; ++k) {
      const int j = rng.uniform_int(k, static_cast<int>(n) - 1);
      std::swap(order[k], order[j]);
      sample[k] = pairs[order[k]];
    }
    FundamentalMatrix F;
    try {
      F = estimate_fundamental_8pt(sample);
    } catch (const Error&) {
      continue;
    }
    std::size_t count = 0;
    for (const auto& p : pairs) count += sampson_distance(F.m, p.a, p.b) < cfg.threshold;
    if (!found || count > best_count) {
      found = true;
      best_count = count;
      result.model = F;
      const double ratio = static_cast<double>(count) / static_cast<double>(n);
      const double p_good = std::pow(ratio, 8.0);
      if (p_good >= 1.0) {
        needed = 0.0;
      } else if (p_good > 0.0) {
        // log1p: log(1 - p_good) rounds to 0 once p_good < eps, which would
        // turn the bound into -inf and end the search on a tiny consensus.
        needed = std::log(1.0 - cfg.confidence) / std::log1p(-p_good);
      }
    }
  }
  result.iterations = iter;
  if (!found) return skip();
  result.inliers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.inliers[i] = sampson_distance(result.model.m, pairs[i].a, pairs[i].b) < cfg.threshold;
  }
  result.inlier_count = best_count;
  return result;
}

}  // namespace tcpdm
