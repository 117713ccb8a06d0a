#include "tcpdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "tcpdm/image_io.hpp"
#include "tcpdm/temporal.hpp"

namespace tcpdm {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

Eigen::MatrixXd to_plane(const FrameTensor& img) {
  // rows = image rows
  Eigen::MatrixXd m(img.height(), img.width());
  for (int u = 0; u < img.height(); ++u)
    for (int v = 0; v < img.width(); ++v) m(u, v) = img(u, v, 0);
  return m;
}

Eigen::VectorXd gaussian_1d() {
  Eigen::VectorXd g(kWindow);
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2 * kSigma * kSigma));
  }
  return g / g.sum();
}

// Valid-mode separable filtering.
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& x, const Eigen::VectorXd& g) {
  const Eigen::Index oh = x.rows() - kWindow + 1, ow = x.cols() - kWindow + 1;
  Eigen::MatrixXd rows_pass(x.rows(), ow);
  for (Eigen::Index c = 0; c < ow; ++c) rows_pass.col(c) = x.middleCols(c, kWindow) * g;
  Eigen::MatrixXd out(oh, ow);
  for (Eigen::Index r = 0; r < oh; ++r) out.row(r) = g.transpose() * rows_pass.middleRows(r, kWindow);
  return out;
}

double ssim_plane(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto g = gaussian_1d();
  const Eigen::ArrayXXd mu_a = filter_valid(a, g).array();
  const Eigen::ArrayXXd mu_b = filter_valid(b, g).array();
  const Eigen::ArrayXXd var_a = filter_valid(a.cwiseProduct(a), g).array() - mu_a * mu_a;
  const Eigen::ArrayXXd var_b = filter_valid(b.cwiseProduct(b), g).array() - mu_b * mu_b;
  const Eigen::ArrayXXd cov = filter_valid(a.cwiseProduct(b), g).array() - mu_a * mu_b;
  const Eigen::ArrayXXd map = ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
                              ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
  return map.mean();
}

}  // namespace

double psnr(const FrameTensor& a, const FrameTensor& b, MetricOptions opt) {
  require_same_shape(a, b, "psnr");
  const auto ya = opt.on_rgb ? a : luminance(a);
  const auto yb = opt.on_rgb ? b : luminance(b);
  const double mse =
      (ya.array().cast<double>() - yb.array().cast<double>()).square().mean();
  if (mse < 1e-10) return kPsnrCapDb;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const FrameTensor& a, const FrameTensor& b, MetricOptions opt) {
  require_same_shape(a, b, "ssim");
  if (a.height() < kWindow || a.width() < kWindow) {
    throw Error(ErrorCode::ImageTooSmall, "ssim needs at least 11x11");
  }
  if (!opt.on_rgb || a.channels() == 1) {
    return ssim_plane(to_plane(luminance(a)), to_plane(luminance(b)));
  }
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    FrameTensor pa(a.height(), a.width(), 1), pb(a.height(), a.width(), 1);
    for (int u = 0; u < a.height(); ++u)
      for (int v = 0; v < a.width(); ++v) {
        pa(u, v, 0) = a(u, v, c);
        pb(u, v, 0) = b(u, v, c);
      }
    total += ssim_plane(to_plane(pa), to_plane(pb));
  }
  return total / a.channels();
}

double warped_frame_error(const std::vector<FrameTensor>& frames, const std::vector<FlowField>& flows,
                          const std::optional<RansacConfig>& verify) {
  if (frames.size() < 2 || flows.size() != frames.size() - 1) {
    throw Error(ErrorCode::LengthMismatch, "need N >= 2 frames and N-1 flows");
  }
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const auto& prev = frames[i - 1];
    const auto& curr = frames[i];
    require_same_shape(prev, curr, "warped_frame_error");
    auto corrs = flow_to_correspondences(flows[i - 1]);
    if (verify) corrs = geometric_verification(corrs, *verify);
    if (corrs.matches.empty()) continue;
    double sum = 0.0;
    for (const auto& m : corrs.matches) {
      for (int c = 0; c < curr.channels(); ++c) {
        const double d = static_cast<double>(curr(m.u2, m.v2, c)) - prev(m.u, m.v, c);
        sum += d * d;
      }
    }
    total += sum / (static_cast<double>(corrs.size()) * curr.channels());
    ++pairs;
  }
  return pairs == 0 ? 0.0 : total / pairs;
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out << "frame_index,psnr_db,ssim\n";
  char line[96];
  for (std::size_t i = 0; i < psnr_db.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", i, psnr_db[i], ssim[i]);
    out << line;
  }
  return out.str();
}

std::string MetricReport::to_summary() const {
  std::ostringstream out;
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << key << '=' << buf << '\n';
  };
  out << "frame_count=" << frame_count << '\n';
  put("mean_psnr_db", mean_psnr);
  put("min_psnr_db", min_psnr);
  put("mean_ssim", mean_ssim);
  put("min_ssim", min_ssim);
  if (warped_error) put("warped_frame_error", *warped_error);
  return out.str();
}

MetricReport evaluate_frames(const std::vector<FrameTensor>& generated,
                             const std::vector<FrameTensor>& reference,
                             const std::vector<FlowField>* flows) {
  if (generated.size() != reference.size() || generated.empty()) {
    throw Error(ErrorCode::LengthMismatch, "generated and reference frame counts differ");
  }
  MetricReport r;
  r.frame_count = generated.size();
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const auto a = to_unit_range(generated[i]);
    const auto b = to_unit_range(reference[i]);
    r.psnr_db.push_back(psnr(a, b));
    r.ssim.push_back(ssim(a, b));
  }
  const double n = static_cast<double>(r.frame_count);
  r.mean_psnr = std::accumulate(r.psnr_db.begin(), r.psnr_db.end(), 0.0) / n;
  r.mean_ssim = std::accumulate(r.ssim.begin(), r.ssim.end(), 0.0) / n;
  r.min_psnr = *std::min_element(r.psnr_db.begin(), r.psnr_db.end());
  r.min_ssim = *std::min_element(r.ssim.begin(), r.ssim.end());
  if (flows && generated.size() >= 2) {
    std::vector<FrameTensor> unit;
    for (const auto& g : generated) unit.push_back(to_unit_range(g));
    r.warped_error = warped_frame_error(unit, *flows);
  }
  return r;
}

}  // namespace tcpdm
