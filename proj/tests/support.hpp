#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "tcpdm/denoiser.hpp"
#include "tcpdm/rng.hpp"

namespace tcpdm::testing {

inline FrameTensor random_frame(int h, int w, int c, Rng& rng, double scale = 1.0) {
  FrameTensor t(h, w, c);
  for (auto& x : t.array()) x = static_cast<float>(scale * rng.normal());
  return t;
}

inline FrameTensor uniform_frame(int h, int w, int c, Rng& rng, double lo, double hi) {
  FrameTensor t(h, w, c);
  for (auto& x : t.array()) x = static_cast<float>(lo + (hi - lo) * rng.uniform());
  return t;
}

inline DenoiserConfig tiny_config(int labels = 2) {
  DenoiserConfig c;
  c.patch_size = 8;
  c.num_labels = labels;
  c.base_width = 8;
  c.depth = 2;
  c.time_embed_dim = 8;
  c.num_groups = 4;
  return c;
}

inline TrainingBatch random_batch(const DenoiserConfig& cfg, int n, Rng& rng) {
  TrainingBatch b;
  const int p = cfg.patch_size;
  for (int i = 0; i < n; ++i) {
    b.push_back({uniform_frame(p, p, 3, rng, -1, 1), uniform_frame(p, p, 1, rng, -1, 1),
                 uniform_frame(p, p, cfg.num_labels, rng, 0, 1)});
  }
  return b;
}

/// Layer-by-layer parameter count of the reduced U-Net, written from the
/// architecture description rather than from the layout builder.
inline long expected_param_count(const DenoiserConfig& c) {
  const long E = c.time_embed_dim, w = c.base_width, d = c.depth;
  const long cin = 3 + (c.ir_replicate_3 ? 3 : 1) + c.num_labels;
  auto conv3 = [](long i, long o) { return 9 * i * o + o; };
  auto res = [&](long i, long o) {
    long n = 2 * i + conv3(i, o) + (E * o + o) + 2 * o + conv3(o, o);
    if (i != o) n += i * o + o;
    return n;
  };
  long n = 2 * (E * E + E) + conv3(cin, w);
  long ch = w;
  for (long l = 0; l < d; ++l) {
    n += res(ch, w << l);
    ch = w << l;
  }
  n += res(ch, ch);
  if (c.use_attention) n += 2 * ch + 4 * (ch * ch + ch);
  for (long l = d - 1; l >= 0; --l) {
    n += res(ch + (w << l), w << l);
    ch = w << l;
  }
  n += 2 * w + conv3(w, 3);
  return n;
}

struct GradCheck {
  double max_rel = 0.0;
  long checked = 0;
  long worst_index = -1;
};

/// Central differences of the double-precision batch loss against the
/// analytic gradient, over every parameter.
inline GradCheck finite_difference_check(const DenoiserConfig& cfg, std::uint64_t seed,
                                         double h = 1e-4, double floor = 1e-6) {
  Rng rng = Rng::stream(seed, {7});
  const auto params = build_denoiser(cfg, rng);
  UNet<double> net(cfg);
  Eigen::VectorXd P = params.params.cast<double>();
  // Nonzero biases and norm affines so no parameter sits at a symmetric point.
  for (Eigen::Index i = 0; i < P.size(); ++i) P[i] += 0.05 * rng.normal();
  const auto batch = random_batch(cfg, 2, rng);
  const auto schedule = make_linear_schedule(20, 1e-3, 0.2);
  std::vector<DiffusionDraw> draws;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    draws.push_back(draw_diffusion_target(cfg.patch_size, cfg.patch_size, 3, schedule.T, rng));
  }
  Eigen::VectorXd grad;
  loss_and_gradient(net, P, batch, draws, schedule, grad);
  // Forward-only loss with the same noising as loss_and_gradient.
  std::vector<nn::Mat<double>> inputs, targets;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x_t = forward_sample(batch[i].x.cast<double>(), draws[i].t, draws[i].eps.cast<double>(), schedule);
    nn::Mat<double> in = assemble_input<double>(cfg, batch[i].x, batch[i].y, batch[i].s);
    in.leftCols(3) = x_t.matrix().transpose();
    inputs.push_back(in);
    targets.push_back(draws[i].eps.matrix().transpose().cast<double>());
  }
  const double count = static_cast<double>(batch.size()) * cfg.patch_size * cfg.patch_size * 3;
  auto loss = [&](const Eigen::VectorXd& params) {
    double sum = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      sum += (net.forward(params.data(), inputs[i], draws[i].t) - targets[i]).squaredNorm();
    }
    return sum / count;
  };
  GradCheck out;
  for (Eigen::Index i = 0; i < P.size(); ++i) {
    const double keep = P[i];
    P[i] = keep + h;
    const double up = loss(P);
    P[i] = keep - h;
    const double down = loss(P);
    P[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double rel =
        std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), floor});
    if (rel > out.max_rel) {
      out.max_rel = rel;
      out.worst_index = static_cast<long>(i);
    }
    ++out.checked;
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tcpdm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace tcpdm::testing
