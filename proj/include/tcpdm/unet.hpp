#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "tcpdm/error.hpp"

namespace tcpdm {

/// Architecture knobs of the conditional noise predictor.
struct DenoiserConfig {
  int patch_size = 16;
  int num_labels = 8;  // L
  bool ir_replicate_3 = false;
  int base_width = 32;
  int depth = 2;
  int time_embed_dim = 64;
  bool use_attention = false;
  int num_groups = 8;

  int ir_channels() const { return ir_replicate_3 ? 3 : 1; }
  /// Input layout is [visible(3) | infrared(1 or 3) | logits(L)].
  int in_channels() const { return 3 + ir_channels() + num_labels; }
  int level_width(int level) const { return base_width << level; }

  void validate() const;
};

inline void DenoiserConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (depth < 1) fail("depth must be >= 1");
  if (patch_size < 1 || patch_size % (1 << depth) != 0) {
    fail("patch_size " + std::to_string(patch_size) + " not divisible by 2^depth = " +
         std::to_string(1 << depth));
  }
  if (num_labels < 0) fail("num_labels must be >= 0");
  if (base_width < 1) fail("base_width must be >= 1");
  if (num_groups < 1 || base_width % num_groups != 0) {
    fail("base_width must be a multiple of num_groups");
  }
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0) fail("time_embed_dim must be even and >= 2");
}

/// element 2k = sin(t / 10000^(2k/dim)), element 2k+1 = cos(same).
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sinusoidal_embedding(int t, int dim) {
  if (dim % 2 != 0) throw Error(ErrorCode::OddDimension, "embedding dim must be even");
  if (t < 0) throw Error(ErrorCode::StepOutOfRange, "timestep must be >= 0");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e(dim);
  for (int k = 0; k < dim / 2; ++k) {
    const double freq = std::pow(10000.0, 2.0 * k / dim);
    e[2 * k] = static_cast<Scalar>(std::sin(t / freq));
    e[2 * k + 1] = static_cast<Scalar>(std::cos(t / freq));
  }
  return e;
}

enum class InitKind { HeNormal, Zeros, Ones };

struct ParamSlot {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  InitKind init = InitKind::Zeros;
  Eigen::Index fan_in = 1;

  Eigen::Index size() const { return rows * cols; }
};

/// Index map from named parameter blocks into one flat vector.
class ParamLayout {
 public:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols, InitKind init,
                  Eigen::Index fan_in = 1) {
    slots_.push_back({std::move(name), size_, rows, cols, init, fan_in});
    size_ += rows * cols;
    return slots_.size() - 1;
  }
  const ParamSlot& operator[](std::size_t i) const { return slots_[i]; }
  const std::vector<ParamSlot>& slots() const { return slots_; }
  Eigen::Index size() const { return size_; }

 private:
  std::vector<ParamSlot> slots_;
  Eigen::Index size_ = 0;
};

namespace nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

template <typename S>
Eigen::Map<const Mat<S>> view(const S* P, const ParamSlot& s) {
  return Eigen::Map<const Mat<S>>(P + s.offset, s.rows, s.cols);
}
template <typename S>
Eigen::Map<Mat<S>> grad_view(S* G, const ParamSlot& s) {
  return Eigen::Map<Mat<S>>(G + s.offset, s.rows, s.cols);
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (S(1) + (-x).exp()).inverse();
}

template <typename S>
Mat<S> silu(const Mat<S>& x) {
  return (x.array() * sigmoid(x.array())).matrix();
}

/// d silu / dx multiplied into the upstream gradient.
template <typename S>
Mat<S> silu_backward(const Mat<S>& x, const Mat<S>& dy) {
  const auto s = sigmoid(x.array()).eval();
  return (dy.array() * (s * (S(1) + x.array() * (S(1) - s)))).matrix();
}

// Activations are planar: rows = pixels (row-major y*W + x), cols = channels.

/// 3x3 zero-padded patch matrix, HW x 9C; column ci*9 + ky*3 + kx.
template <typename S>
Mat<S> im2col3(const Mat<S>& x, int H, int W) {
  const Eigen::Index C = x.cols();
  Mat<S> cols = Mat<S>::Zero(static_cast<Eigen::Index>(H) * W, 9 * C);
  for (Eigen::Index ci = 0; ci < C; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int dy = ky - 1, dx = kx - 1;
        const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
        auto dst = cols.col(ci * 9 + ky * 3 + kx);
        for (int y = std::max(0, -dy); y < std::min(H, H - dy); ++y) {
          dst.segment(y * W + x0, x1 - x0) = x.col(ci).segment((y + dy) * W + x0 + dx, x1 - x0);
        }
      }
    }
  }
  return cols;
}

template <typename S>
void col2im3_add(const Mat<S>& dcols, int H, int W, Mat<S>& dx) {
  const Eigen::Index C = dx.cols();
  for (Eigen::Index ci = 0; ci < C; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int dy = ky - 1, dxo = kx - 1;
        const int x0 = std::max(0, -dxo), x1 = std::min(W, W - dxo);
        const auto src = dcols.col(ci * 9 + ky * 3 + kx);
        for (int y = std::max(0, -dy); y < std::min(H, H - dy); ++y) {
          dx.col(ci).segment((y + dy) * W + x0 + dxo, x1 - x0) += src.segment(y * W + x0, x1 - x0);
        }
      }
    }
  }
}

template <typename S>
Mat<S> avg_pool2(const Mat<S>& x, int H, int W) {
  const int h = H / 2, w = W / 2;
  Mat<S> out(static_cast<Eigen::Index>(h) * w, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        out(y * w + xx, c) = S(0.25) * (x((2 * y) * W + 2 * xx, c) + x((2 * y) * W + 2 * xx + 1, c) +
                                        x((2 * y + 1) * W + 2 * xx, c) +
                                        x((2 * y + 1) * W + 2 * xx + 1, c));
  return out;
}

template <typename S>
Mat<S> avg_pool2_backward(const Mat<S>& dy, int H, int W) {
  const int h = H / 2, w = W / 2;
  Mat<S> dx(static_cast<Eigen::Index>(H) * W, dy.cols());
  for (Eigen::Index c = 0; c < dy.cols(); ++c)
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) dx(y * W + xx, c) = S(0.25) * dy((y / 2) * w + xx / 2, c);
  (void)h;
  return dx;
}

/// Nearest-neighbour 2x upsampling from (H/2, W/2) to (H, W).
template <typename S>
Mat<S> upsample2(const Mat<S>& x, int H, int W) {
  const int w = W / 2;
  Mat<S> out(static_cast<Eigen::Index>(H) * W, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) out(y * W + xx, c) = x((y / 2) * w + xx / 2, c);
  return out;
}

template <typename S>
Mat<S> upsample2_backward(const Mat<S>& dy, int H, int W) {
  const int h = H / 2, w = W / 2;
  Mat<S> dx = Mat<S>::Zero(static_cast<Eigen::Index>(h) * w, dy.cols());
  for (Eigen::Index c = 0; c < dy.cols(); ++c)
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) dx((y / 2) * w + xx / 2, c) += dy(y * W + xx, c);
  return dx;
}

struct Conv {
  std::size_t w = 0, b = 0;
  int cin = 0, cout = 0, k = 3;

  static Conv make(ParamLayout& layout, const std::string& name, int cin, int cout, int k) {
    Conv c;
    c.cin = cin;
    c.cout = cout;
    c.k = k;
    c.w = layout.add(name + ".w", static_cast<Eigen::Index>(k) * k * cin, cout, InitKind::HeNormal,
                     static_cast<Eigen::Index>(k) * k * cin);
    c.b = layout.add(name + ".b", 1, cout, InitKind::Zeros);
    return c;
  }

  /// For k == 3 `cols` receives the im2col matrix used by backward.
  template <typename S>
  Mat<S> forward(const ParamLayout& L, const S* P, const Mat<S>& x, int H, int W,
                 Mat<S>& cols) const {
    const auto Wt = view(P, L[w]);
    const auto bias = view(P, L[b]);
    if (k == 3) {
      cols = im2col3(x, H, W);
      Mat<S> out = cols * Wt;
      out.rowwise() += bias.row(0);
      return out;
    }
    Mat<S> out = x * Wt;
    out.rowwise() += bias.row(0);
    return out;
  }

  template <typename S>
  Mat<S> backward(const ParamLayout& L, const S* P, S* G, const Mat<S>& x_or_cols,
                  const Mat<S>& dy, int H, int W) const {
    const auto Wt = view(P, L[w]);
    grad_view(G, L[w]).noalias() += x_or_cols.transpose() * dy;
    grad_view(G, L[b]) += dy.colwise().sum();
    if (k == 3) {
      const Mat<S> dcols = dy * Wt.transpose();
      Mat<S> dx = Mat<S>::Zero(dy.rows(), cin);
      col2im3_add(dcols, H, W, dx);
      return dx;
    }
    return dy * Wt.transpose();
  }
};

template <typename S>
struct NormCache {
  Mat<S> xhat;
  Vec<S> inv_std;
};

struct GroupNorm {
  std::size_t gamma = 0, beta = 0;
  int channels = 0, groups = 1;
  static constexpr double kEps = 1e-5;

  static GroupNorm make(ParamLayout& layout, const std::string& name, int channels, int groups) {
    GroupNorm g;
    g.channels = channels;
    g.groups = groups;
    g.gamma = layout.add(name + ".gamma", 1, channels, InitKind::Ones);
    g.beta = layout.add(name + ".beta", 1, channels, InitKind::Zeros);
    return g;
  }

  template <typename S>
  Mat<S> forward(const ParamLayout& L, const S* P, const Mat<S>& x, NormCache<S>& cache) const {
    const int cg = channels / groups;
    const auto n = static_cast<S>(x.rows() * cg);
    cache.xhat.resize(x.rows(), x.cols());
    cache.inv_std.resize(groups);
    for (int g = 0; g < groups; ++g) {
      const auto blk = x.middleCols(g * cg, cg);
      const S mean = blk.sum() / n;
      const S var = (blk.array() - mean).square().sum() / n;
      const S inv = S(1) / std::sqrt(var + static_cast<S>(kEps));
      cache.inv_std[g] = inv;
      cache.xhat.middleCols(g * cg, cg) = ((blk.array() - mean) * inv).matrix();
    }
    const auto gm = view(P, L[gamma]);
    const auto bt = view(P, L[beta]);
    Mat<S> y = cache.xhat * gm.row(0).asDiagonal();
    y.rowwise() += bt.row(0);
    return y;
  }

  template <typename S>
  Mat<S> backward(const ParamLayout& L, const S* P, S* G, const NormCache<S>& cache,
                  const Mat<S>& dy) const {
    const int cg = channels / groups;
    const auto gm = view(P, L[gamma]);
    grad_view(G, L[gamma]) += (dy.array() * cache.xhat.array()).matrix().colwise().sum();
    grad_view(G, L[beta]) += dy.colwise().sum();
    const Mat<S> dxhat = dy * gm.row(0).asDiagonal();
    Mat<S> dx(dy.rows(), dy.cols());
    const auto n = static_cast<S>(dy.rows() * cg);
    for (int g = 0; g < groups; ++g) {
      const auto dh = dxhat.middleCols(g * cg, cg).array();
      const auto xh = cache.xhat.middleCols(g * cg, cg).array();
      const S sum_dh = dh.sum();
      const S sum_dh_xh = (dh * xh).sum();
      dx.middleCols(g * cg, cg) =
          ((cache.inv_std[g] / n) * (n * dh - sum_dh - xh * sum_dh_xh)).matrix();
    }
    return dx;
  }
};

struct Linear {
  std::size_t w = 0, b = 0;
  int in = 0, out = 0;

  static Linear make(ParamLayout& layout, const std::string& name, int in, int out) {
    Linear l;
    l.in = in;
    l.out = out;
    l.w = layout.add(name + ".w", out, in, InitKind::HeNormal, in);
    l.b = layout.add(name + ".b", out, 1, InitKind::Zeros);
    return l;
  }

  template <typename S>
  Vec<S> forward(const ParamLayout& L, const S* P, const Vec<S>& x) const {
    return view(P, L[w]) * x + view(P, L[b]);
  }

  template <typename S>
  Vec<S> backward(const ParamLayout& L, const S* P, S* G, const Vec<S>& x, const Vec<S>& dy) const {
    grad_view(G, L[w]).noalias() += dy * x.transpose();
    grad_view(G, L[b]) += dy;
    return view(P, L[w]).transpose() * dy;
  }
};

template <typename S>
struct ResBlockCache {
  Mat<S> x;
  NormCache<S> gn1;
  Mat<S> a1;
  Mat<S> cols1;
  Mat<S> h;
  NormCache<S> gn2;
  Mat<S> a2;
  Mat<S> cols2;
};

/// GN -> SiLU -> conv -> (+ time projection) -> GN -> SiLU -> conv, plus a
/// 1x1 skip projection when the channel count changes.
struct ResBlock {
  GroupNorm gn1, gn2;
  Conv conv1, conv2, skip;
  Linear temb_proj;
  bool has_skip = false;

  static ResBlock make(ParamLayout& layout, const std::string& name, int cin, int cout,
                       int temb_dim, int groups) {
    ResBlock r;
    r.gn1 = GroupNorm::make(layout, name + ".gn1", cin, groups);
    r.conv1 = Conv::make(layout, name + ".conv1", cin, cout, 3);
    r.temb_proj = Linear::make(layout, name + ".temb", temb_dim, cout);
    r.gn2 = GroupNorm::make(layout, name + ".gn2", cout, groups);
    r.conv2 = Conv::make(layout, name + ".conv2", cout, cout, 3);
    r.has_skip = cin != cout;
    if (r.has_skip) r.skip = Conv::make(layout, name + ".skip", cin, cout, 1);
    return r;
  }

  template <typename S>
  Mat<S> forward(const ParamLayout& L, const S* P, const Mat<S>& x, const Vec<S>& temb, int H,
                 int W, ResBlockCache<S>& c) const {
    c.x = x;
    c.a1 = gn1.forward(L, P, x, c.gn1);
    c.h = conv1.forward(L, P, silu(c.a1), H, W, c.cols1);
    c.h.rowwise() += temb_proj.forward(L, P, temb).transpose();
    c.a2 = gn2.forward(L, P, c.h, c.gn2);
    Mat<S> out = conv2.forward(L, P, silu(c.a2), H, W, c.cols2);
    if (has_skip) {
      Mat<S> unused;
      out += skip.forward(L, P, x, H, W, unused);
    } else {
      out += x;
    }
    return out;
  }

  /// Accumulates parameter gradients into G and the time-embedding gradient
  /// into d_temb; returns the input gradient.
  template <typename S>
  Mat<S> backward(const ParamLayout& L, const S* P, S* G, const Vec<S>& temb,
                  const ResBlockCache<S>& c, const Mat<S>& dy, int H, int W, Vec<S>& d_temb) const {
    Mat<S> dx = has_skip ? skip.backward(L, P, G, c.x, dy, H, W) : dy;
    Mat<S> d = conv2.backward(L, P, G, c.cols2, dy, H, W);
    d = gn2.backward(L, P, G, c.gn2, silu_backward(c.a2, d));
    const Vec<S> d_proj = d.colwise().sum().transpose();
    d_temb += temb_proj.backward(L, P, G, temb, d_proj);
    d = conv1.backward(L, P, G, c.cols1, d, H, W);
    dx += gn1.backward(L, P, G, c.gn1, silu_backward(c.a1, d));
    return dx;
  }
};

template <typename S>
struct AttentionCache {
  Mat<S> x;
  NormCache<S> gn;
  Mat<S> h, q, k, v, attn, o;
};

/// Single-head spatial self-attention with a residual connection.
struct SelfAttention {
  GroupNorm gn;
  Conv q, k, v, proj;
  int channels = 0;

  static SelfAttention make(ParamLayout& layout, const std::string& name, int channels,
                            int groups) {
    SelfAttention a;
    a.channels = channels;
    a.gn = GroupNorm::make(layout, name + ".gn", channels, groups);
    a.q = Conv::make(layout, name + ".q", channels, channels, 1);
    a.k = Conv::make(layout, name + ".k", channels, channels, 1);
    a.v = Conv::make(layout, name + ".v", channels, channels, 1);
    a.proj = Conv::make(layout, name + ".proj", channels, channels, 1);
    return a;
  }

  template <typename S>
  Mat<S> forward(const ParamLayout& L, const S* P, const Mat<S>& x, AttentionCache<S>& c) const {
    Mat<S> unused;
    const S scale = S(1) / std::sqrt(static_cast<S>(channels));
    c.x = x;
    c.h = gn.forward(L, P, x, c.gn);
    c.q = q.forward(L, P, c.h, 0, 0, unused);
    c.k = k.forward(L, P, c.h, 0, 0, unused);
    c.v = v.forward(L, P, c.h, 0, 0, unused);
    c.attn = (c.q * c.k.transpose()) * scale;
    for (Eigen::Index i = 0; i < c.attn.rows(); ++i) {
      auto row = c.attn.row(i).array();
      row = (row - row.maxCoeff()).exp();
      row /= row.sum();
    }
    c.o = c.attn * c.v;
    return x + proj.forward(L, P, c.o, 0, 0, unused);
  }

  template <typename S>
  Mat<S> backward(const ParamLayout& L, const S* P, S* G, const AttentionCache<S>& c,
                  const Mat<S>& dy) const {
    const S scale = S(1) / std::sqrt(static_cast<S>(channels));
    const Mat<S> d_o = proj.backward(L, P, G, c.o, dy, 0, 0);
    const Mat<S> d_attn = d_o * c.v.transpose();
    const Mat<S> d_v = c.attn.transpose() * d_o;
    const Vec<S> row_dot = (d_attn.array() * c.attn.array()).rowwise().sum();
    const Mat<S> d_scores =
        (c.attn.array() * (d_attn.array().colwise() - row_dot.array())).matrix() * scale;
    const Mat<S> d_q = d_scores * c.k;
    const Mat<S> d_k = d_scores.transpose() * c.q;
    Mat<S> d_h = q.backward(L, P, G, c.h, d_q, 0, 0);
    d_h += k.backward(L, P, G, c.h, d_k, 0, 0);
    d_h += v.backward(L, P, G, c.h, d_v, 0, 0);
    return dy + gn.backward(L, P, G, c.gn, d_h);
  }
};

}  // namespace nn

/// Reduced conditional U-Net. Holds only the architecture and parameter
/// layout; parameters live in a flat vector passed to forward/backward, so
/// the same network runs in float for training and double for gradient
/// checking.
template <typename S>
class UNet {
 public:
  using Mat = nn::Mat<S>;
  using Vec = nn::Vec<S>;

  struct Tape {
    int t = 0;
    Vec emb, t_a, t_c, temb;
    Mat in_cols;
    std::vector<nn::ResBlockCache<S>> down, up;
    std::vector<Mat> skips;
    nn::ResBlockCache<S> mid;
    nn::AttentionCache<S> attn;
    nn::NormCache<S> out_gn;
    Mat out_a, out_cols;
  };

  explicit UNet(const DenoiserConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    const int c = cfg.base_width;
    const int E = cfg.time_embed_dim;
    const int G = cfg.num_groups;
    time1_ = nn::Linear::make(layout_, "time.lin1", E, E);
    time2_ = nn::Linear::make(layout_, "time.lin2", E, E);
    conv_in_ = nn::Conv::make(layout_, "conv_in", cfg.in_channels(), c, 3);
    int ch = c;
    for (int l = 0; l < cfg.depth; ++l) {
      down_.push_back(
          nn::ResBlock::make(layout_, "down" + std::to_string(l), ch, cfg.level_width(l), E, G));
      ch = cfg.level_width(l);
    }
    mid_ = nn::ResBlock::make(layout_, "mid", ch, ch, E, G);
    if (cfg.use_attention) attn_ = nn::SelfAttention::make(layout_, "mid.attn", ch, G);
    up_.resize(cfg.depth);
    for (int l = cfg.depth - 1; l >= 0; --l) {
      up_[l] = nn::ResBlock::make(layout_, "up" + std::to_string(l), ch + cfg.level_width(l),
                                  cfg.level_width(l), E, G);
      ch = cfg.level_width(l);
    }
    out_gn_ = nn::GroupNorm::make(layout_, "out.gn", c, G);
    conv_out_ = nn::Conv::make(layout_, "conv_out", c, 3, 3);
  }

  const DenoiserConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }
  Eigen::Index num_params() const { return layout_.size(); }

  /// input: (p*p) x in_channels planar. Returns (p*p) x 3.
  Mat forward(const S* P, const Mat& input, int t, Tape& tp) const {
    const auto& L = layout_;
    const int p = cfg_.patch_size;
    tp.t = t;
    tp.emb = sinusoidal_embedding<S>(t, cfg_.time_embed_dim);
    tp.t_a = time1_.forward(L, P, tp.emb);
    tp.t_c = time2_.forward(L, P, Vec(nn::silu<S>(tp.t_a)));
    tp.temb = nn::silu<S>(tp.t_c);

    Mat h = conv_in_.forward(L, P, input, p, p, tp.in_cols);
    tp.down.resize(cfg_.depth);
    tp.up.resize(cfg_.depth);
    tp.skips.resize(cfg_.depth);
    int res = p;
    for (int l = 0; l < cfg_.depth; ++l) {
      h = down_[l].forward(L, P, h, tp.temb, res, res, tp.down[l]);
      tp.skips[l] = h;
      h = nn::avg_pool2(h, res, res);
      res /= 2;
    }
    h = mid_.forward(L, P, h, tp.temb, res, res, tp.mid);
    if (cfg_.use_attention) h = attn_.forward(L, P, h, tp.attn);
    for (int l = cfg_.depth - 1; l >= 0; --l) {
      res *= 2;
      Mat up = nn::upsample2(h, res, res);
      Mat cat(up.rows(), up.cols() + tp.skips[l].cols());
      cat << up, tp.skips[l];
      h = up_[l].forward(L, P, cat, tp.temb, res, res, tp.up[l]);
    }
    tp.out_a = out_gn_.forward(L, P, h, tp.out_gn);
    return conv_out_.forward(L, P, nn::silu<S>(tp.out_a), p, p, tp.out_cols);
  }

  Mat forward(const S* P, const Mat& input, int t) const {
    Tape tp;
    return forward(P, input, t, tp);
  }

  /// Accumulates d(loss)/d(params) into G given d(loss)/d(output).
  void backward(const S* P, const Tape& tp, const Mat& d_out, S* G) const {
    const auto& L = layout_;
    const int p = cfg_.patch_size;
    Vec d_temb = Vec::Zero(cfg_.time_embed_dim);

    Mat d = conv_out_.backward(L, P, G, tp.out_cols, d_out, p, p);
    d = out_gn_.backward(L, P, G, tp.out_gn, nn::silu_backward(tp.out_a, d));
    int res = p;
    std::vector<Mat> d_skips(cfg_.depth);
    for (int l = 0; l < cfg_.depth; ++l) {
      const Mat d_cat = up_[l].backward(L, P, G, tp.temb, tp.up[l], d, res, res, d_temb);
      const Eigen::Index up_ch = d_cat.cols() - tp.skips[l].cols();
      d_skips[l] = d_cat.rightCols(tp.skips[l].cols());
      d = nn::upsample2_backward<S>(d_cat.leftCols(up_ch), res, res);
      res /= 2;
    }
    if (cfg_.use_attention) d = attn_.backward(L, P, G, tp.attn, d);
    d = mid_.backward(L, P, G, tp.temb, tp.mid, d, res, res, d_temb);
    for (int l = cfg_.depth - 1; l >= 0; --l) {
      res *= 2;
      d = nn::avg_pool2_backward(d, res, res);
      d += d_skips[l];
      d = down_[l].backward(L, P, G, tp.temb, tp.down[l], d, res, res, d_temb);
    }
    conv_in_.backward(L, P, G, tp.in_cols, d, p, p);

    const Vec d_c = nn::silu_backward<S>(tp.t_c, d_temb);
    const Vec d_b = time2_.backward(L, P, G, Vec(nn::silu<S>(tp.t_a)), d_c);
    time1_.backward(L, P, G, tp.emb, Vec(nn::silu_backward<S>(tp.t_a, d_b)));
  }

 private:
  DenoiserConfig cfg_;
  ParamLayout layout_;
  nn::Linear time1_, time2_;
  nn::Conv conv_in_, conv_out_;
  std::vector<nn::ResBlock> down_, up_;
  nn::ResBlock mid_;
  nn::SelfAttention attn_;
  nn::GroupNorm out_gn_;
};

}  // namespace tcpdm
