#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "gnet/tensor.hpp"

namespace gnet {

enum class Padding { same, valid };

namespace detail {

// TF-style padding arithmetic. For `same`, output dims = ceil(in/stride) and
// total padding is split with the smaller half at the top/left.
struct ConvGeom {
  int oh, ow, pt, pl;
};

inline ConvGeom conv_geom(int h, int w, int kh, int kw, int stride, Padding pad) {
  ConvGeom g{};
  if (pad == Padding::same) {
    g.oh = (h + stride - 1) / stride;
    g.ow = (w + stride - 1) / stride;
    int ph = std::max((g.oh - 1) * stride + kh - h, 0);
    int pw = std::max((g.ow - 1) * stride + kw - w, 0);
    g.pt = ph / 2;
    g.pl = pw / 2;
  } else {
    if (h < kh || w < kw) throw ConfigError("conv2d: input smaller than kernel (valid)");
    g.oh = (h - kh) / stride + 1;
    g.ow = (w - kw) / stride + 1;
    g.pt = g.pl = 0;
  }
  return g;
}

}  // namespace detail

// Cross-correlation (no kernel flip), zero padding.
inline Tensor conv2d(const Tensor& in, const Kernel& k, int stride = 1,
                     Padding pad = Padding::same) {
  if (in.c != k.ci) throw ConfigError("conv2d: channel mismatch");
  if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
  const auto g = detail::conv_geom(in.h, in.w, k.kh, k.kw, stride, pad);
  Tensor out(g.oh, g.ow, k.co);
  const int ci = k.ci, co = k.co;
  for (int y = 0; y < g.oh; ++y) {
    const int iy0 = y * stride - g.pt;
    for (int x = 0; x < g.ow; ++x) {
      const int ix0 = x * stride - g.pl;
      double* op = out.px(y, x);
      for (int dy = 0; dy < k.kh; ++dy) {
        const int iy = iy0 + dy;
        if (iy < 0 || iy >= in.h) continue;
        for (int dx = 0; dx < k.kw; ++dx) {
          const int ix = ix0 + dx;
          if (ix < 0 || ix >= in.w) continue;
          const double* ip = in.px(iy, ix);
          for (int i = 0; i < ci; ++i) {
            const double val = ip[i];
            const double* wp = k.tap(dy, dx, i);
            for (int o = 0; o < co; ++o) op[o] += val * wp[o];
          }
        }
      }
    }
  }
  return out;
}

struct ConvGrads {
  Tensor d_input;
  Kernel d_kernel;
};

// Exact reverse-mode gradients of conv2d. When the kernel is channel
// symmetric the kernel gradient is projected onto the symmetric subspace,
// (g + g_chT)/2, so constrained kernels stay symmetric under any update.
inline ConvGrads conv2d_grad(const Tensor& in, const Kernel& k, const Tensor& up,
                             int stride = 1, Padding pad = Padding::same) {
  if (in.c != k.ci) throw ConfigError("conv2d_grad: channel mismatch");
  const auto g = detail::conv_geom(in.h, in.w, k.kh, k.kw, stride, pad);
  if (up.h != g.oh || up.w != g.ow || up.c != k.co)
    throw ConfigError("conv2d_grad: upstream shape mismatch");

  ConvGrads out{Tensor(in.h, in.w, in.c), Kernel(k.kh, k.kw, k.ci, k.co, k.symmetric)};
  const int ci = k.ci, co = k.co;

  // Gather form for d_input: deterministic, no scatter.
  for (int iy = 0; iy < in.h; ++iy) {
    for (int ix = 0; ix < in.w; ++ix) {
      double* gp = out.d_input.px(iy, ix);
      for (int dy = 0; dy < k.kh; ++dy) {
        const int ytop = iy - dy + g.pt;
        if (ytop < 0 || ytop % stride != 0) continue;
        const int y = ytop / stride;
        if (y >= g.oh) continue;
        for (int dx = 0; dx < k.kw; ++dx) {
          const int xtop = ix - dx + g.pl;
          if (xtop < 0 || xtop % stride != 0) continue;
          const int x = xtop / stride;
          if (x >= g.ow) continue;
          const double* upp = up.px(y, x);
          for (int i = 0; i < ci; ++i) {
            const double* wp = k.tap(dy, dx, i);
            double acc = 0.0;
            for (int o = 0; o < co; ++o) acc += wp[o] * upp[o];
            gp[i] += acc;
          }
        }
      }
    }
  }

  for (int y = 0; y < g.oh; ++y) {
    const int iy0 = y * stride - g.pt;
    for (int x = 0; x < g.ow; ++x) {
      const int ix0 = x * stride - g.pl;
      const double* upp = up.px(y, x);
      for (int dy = 0; dy < k.kh; ++dy) {
        const int iy = iy0 + dy;
        if (iy < 0 || iy >= in.h) continue;
        for (int dx = 0; dx < k.kw; ++dx) {
          const int ix = ix0 + dx;
          if (ix < 0 || ix >= in.w) continue;
          const double* ip = in.px(iy, ix);
          for (int i = 0; i < ci; ++i) {
            const double val = ip[i];
            double* gw = out.d_kernel.tap(dy, dx, i);
            for (int o = 0; o < co; ++o) gw[o] += val * upp[o];
          }
        }
      }
    }
  }

  if (k.symmetric) symmetrize_channels(out.d_kernel);
  return out;
}

inline void add_channel_bias(Tensor& t, const std::vector<double>& bias) {
  if (static_cast<int>(bias.size()) != t.c) throw ConfigError("bias: channel mismatch");
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x) {
      double* p = t.px(y, x);
      for (int k = 0; k < t.c; ++k) p[k] += bias[k];
    }
}

// d_bias = sum over spatial positions of upstream.
inline std::vector<double> channel_bias_grad(const Tensor& up) {
  std::vector<double> g(up.c, 0.0);
  for (int y = 0; y < up.h; ++y)
    for (int x = 0; x < up.w; ++x) {
      const double* p = up.px(y, x);
      for (int k = 0; k < up.c; ++k) g[k] += p[k];
    }
  return g;
}

// ---------------------------------------------------------------------------
// 2x2 stride-2 max pooling. Odd dims are padded right/bottom with -inf
// (out-of-range taps skipped). Ties break to the first index in (y, x) scan
// order via strict comparison.

struct PoolResult {
  Tensor out;
  std::vector<int> argmax;  // flat index into the input buffer, per output element
};

inline PoolResult maxpool2(const Tensor& in) {
  const int oh = (in.h + 1) / 2, ow = (in.w + 1) / 2;
  PoolResult r{Tensor(oh, ow, in.c), std::vector<int>(static_cast<size_t>(oh) * ow * in.c, -1)};
  size_t oi = 0;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      for (int k = 0; k < in.c; ++k, ++oi) {
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = -1;
        for (int dy = 0; dy < 2; ++dy) {
          const int iy = 2 * y + dy;
          if (iy >= in.h) continue;
          for (int dx = 0; dx < 2; ++dx) {
            const int ix = 2 * x + dx;
            if (ix >= in.w) continue;
            const double val = in.at(iy, ix, k);
            if (val > best) {
              best = val;
              best_idx = (iy * in.w + ix) * in.c + k;
            }
          }
        }
        r.out.v[oi] = best;
        r.argmax[oi] = best_idx;
      }
  return r;
}

inline Tensor maxpool2_grad(const Tensor& up, const std::vector<int>& argmax, int in_h,
                            int in_w, int in_c) {
  if (up.size() != argmax.size()) throw ConfigError("maxpool2_grad: argmax size mismatch");
  Tensor g(in_h, in_w, in_c);
  for (size_t i = 0; i < up.size(); ++i) g.v[argmax[i]] += up.v[i];
  return g;
}

// ---------------------------------------------------------------------------
// Bilinear resize, align-corners-false: sample centers at (i+0.5)*scale - 0.5,
// edge-clamped.

namespace detail {
struct LerpTap {
  int lo, hi;
  double f;  // weight of hi
};

inline LerpTap lerp_tap(int i, int out_n, int in_n) {
  const double s = (i + 0.5) * static_cast<double>(in_n) / out_n - 0.5;
  int lo = static_cast<int>(std::floor(s));
  double f = s - lo;
  int hi = lo + 1;
  lo = std::clamp(lo, 0, in_n - 1);
  hi = std::clamp(hi, 0, in_n - 1);
  return {lo, hi, f};
}
}  // namespace detail

inline Tensor bilinear_resize(const Tensor& in, int oh, int ow) {
  if (oh < 1 || ow < 1) throw ConfigError("bilinear_resize: output dims must be >= 1");
  Tensor out(oh, ow, in.c);
  for (int y = 0; y < oh; ++y) {
    const auto ty = detail::lerp_tap(y, oh, in.h);
    for (int x = 0; x < ow; ++x) {
      const auto tx = detail::lerp_tap(x, ow, in.w);
      const double w00 = (1 - ty.f) * (1 - tx.f), w01 = (1 - ty.f) * tx.f;
      const double w10 = ty.f * (1 - tx.f), w11 = ty.f * tx.f;
      const double* p00 = in.px(ty.lo, tx.lo);
      const double* p01 = in.px(ty.lo, tx.hi);
      const double* p10 = in.px(ty.hi, tx.lo);
      const double* p11 = in.px(ty.hi, tx.hi);
      double* op = out.px(y, x);
      for (int k = 0; k < in.c; ++k)
        op[k] = w00 * p00[k] + w01 * p01[k] + w10 * p10[k] + w11 * p11[k];
    }
  }
  return out;
}

inline Tensor bilinear_resize_grad(const Tensor& up, int in_h, int in_w) {
  Tensor g(in_h, in_w, up.c);
  for (int y = 0; y < up.h; ++y) {
    const auto ty = detail::lerp_tap(y, up.h, in_h);
    for (int x = 0; x < up.w; ++x) {
      const auto tx = detail::lerp_tap(x, up.w, in_w);
      const double w00 = (1 - ty.f) * (1 - tx.f), w01 = (1 - ty.f) * tx.f;
      const double w10 = ty.f * (1 - tx.f), w11 = ty.f * tx.f;
      const double* upp = up.px(y, x);
      double* p00 = g.px(ty.lo, tx.lo);
      double* p01 = g.px(ty.lo, tx.hi);
      double* p10 = g.px(ty.hi, tx.lo);
      double* p11 = g.px(ty.hi, tx.hi);
      for (int k = 0; k < up.c; ++k) {
        p00[k] += w00 * upp[k];
        p01[k] += w01 * upp[k];
        p10[k] += w10 * upp[k];
        p11[k] += w11 * upp[k];
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Fractionally-strided (transpose) convolution: output dims = input * stride.
// Kernel is in layer orientation (ci = input channels, co = output channels).
// Equivalent to the input-gradient of a stride-s same-padded conv2d, which is
// what the duality test checks.

inline Tensor transpose_conv2d(const Tensor& in, const Kernel& k, int stride = 2) {
  if (in.c != k.ci) throw ConfigError("transpose_conv2d: channel mismatch");
  if (stride < 1) throw ConfigError("transpose_conv2d: stride must be >= 1");
  const int oh = in.h * stride, ow = in.w * stride;
  const int pt = std::max(k.kh - stride, 0) / 2;
  const int pl = std::max(k.kw - stride, 0) / 2;
  Tensor out(oh, ow, k.co);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x) {
      const double* ip = in.px(y, x);
      for (int dy = 0; dy < k.kh; ++dy) {
        const int oy = y * stride + dy - pt;
        if (oy < 0 || oy >= oh) continue;
        for (int dx = 0; dx < k.kw; ++dx) {
          const int ox = x * stride + dx - pl;
          if (ox < 0 || ox >= ow) continue;
          double* op = out.px(oy, ox);
          for (int a = 0; a < k.ci; ++a) {
            const double val = ip[a];
            const double* wp = k.tap(dy, dx, a);
            for (int b = 0; b < k.co; ++b) op[b] += val * wp[b];
          }
        }
      }
    }
  return out;
}

struct TransposeConvGrads {
  Tensor d_input;
  Kernel d_kernel;
};

inline TransposeConvGrads transpose_conv2d_grad(const Tensor& in, const Kernel& k,
                                                const Tensor& up, int stride = 2) {
  const int oh = in.h * stride, ow = in.w * stride;
  if (up.h != oh || up.w != ow || up.c != k.co)
    throw ConfigError("transpose_conv2d_grad: upstream shape mismatch");
  const int pt = std::max(k.kh - stride, 0) / 2;
  const int pl = std::max(k.kw - stride, 0) / 2;
  TransposeConvGrads g{Tensor(in.h, in.w, in.c), Kernel(k.kh, k.kw, k.ci, k.co, k.symmetric)};
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x) {
      const double* ip = in.px(y, x);
      double* gip = g.d_input.px(y, x);
      for (int dy = 0; dy < k.kh; ++dy) {
        const int oy = y * stride + dy - pt;
        if (oy < 0 || oy >= oh) continue;
        for (int dx = 0; dx < k.kw; ++dx) {
          const int ox = x * stride + dx - pl;
          if (ox < 0 || ox >= ow) continue;
          const double* upp = up.px(oy, ox);
          for (int a = 0; a < k.ci; ++a) {
            const double* wp = k.tap(dy, dx, a);
            double* gw = g.d_kernel.tap(dy, dx, a);
            double acc = 0.0;
            for (int b = 0; b < k.co; ++b) {
              acc += wp[b] * upp[b];
              gw[b] += ip[a] * upp[b];
            }
            gip[a] += acc;
          }
        }
      }
    }
  if (k.symmetric) symmetrize_channels(g.d_kernel);
  return g;
}

// ---------------------------------------------------------------------------
// Elementwise nonlinearities. ReLU subgradient at exactly 0 is 0.

inline Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.v) v = v > 0.0 ? v : 0.0;
  return out;
}

inline Tensor relu_grad(const Tensor& x, const Tensor& up) {
  check_same_shape(x, up, "relu_grad");
  Tensor g = up;
  for (size_t i = 0; i < g.size(); ++i)
    if (x.v[i] <= 0.0) g.v[i] = 0.0;
  return g;
}

inline double elu_scalar(double x) { return x > 0.0 ? x : std::expm1(x); }

inline Tensor elu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.v) v = elu_scalar(v);
  return out;
}

inline Tensor elu_grad(const Tensor& x, const Tensor& up) {
  check_same_shape(x, up, "elu_grad");
  Tensor g = up;
  for (size_t i = 0; i < g.size(); ++i)
    if (x.v[i] <= 0.0) g.v[i] *= std::exp(x.v[i]);
  return g;
}

inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.v) v = sigmoid_scalar(v);
  return out;
}

// Gradient expressed through the forward output y = sigmoid(x).
inline Tensor sigmoid_grad_from_output(const Tensor& y, const Tensor& up) {
  check_same_shape(y, up, "sigmoid_grad");
  Tensor g = up;
  for (size_t i = 0; i < g.size(); ++i) g.v[i] *= y.v[i] * (1.0 - y.v[i]);
  return g;
}

// ---------------------------------------------------------------------------
// Instance normalization: per-channel spatial standardization with learned
// scale and bias. Statistics (population variance) are recomputed on every
// call.

struct InstNormCache {
  std::vector<double> mean, inv_std;
};

inline Tensor instance_norm(const Tensor& x, const NormParams& p,
                            InstNormCache* cache = nullptr) {
  if (p.channels() != x.c) throw ConfigError("instance_norm: channel mismatch");
  if (p.epsilon <= 0.0) throw ConfigError("instance_norm: epsilon must be > 0");
  const int n = x.h * x.w;
  std::vector<double> mean(x.c, 0.0), inv_std(x.c, 0.0);
  for (int y = 0; y < x.h; ++y)
    for (int xx = 0; xx < x.w; ++xx) {
      const double* px = x.px(y, xx);
      for (int k = 0; k < x.c; ++k) mean[k] += px[k];
    }
  for (int k = 0; k < x.c; ++k) mean[k] /= n;
  std::vector<double> var(x.c, 0.0);
  for (int y = 0; y < x.h; ++y)
    for (int xx = 0; xx < x.w; ++xx) {
      const double* px = x.px(y, xx);
      for (int k = 0; k < x.c; ++k) {
        const double d = px[k] - mean[k];
        var[k] += d * d;
      }
    }
  for (int k = 0; k < x.c; ++k) inv_std[k] = 1.0 / std::sqrt(var[k] / n + p.epsilon);

  Tensor out(x.h, x.w, x.c);
  for (int y = 0; y < x.h; ++y)
    for (int xx = 0; xx < x.w; ++xx) {
      const double* px = x.px(y, xx);
      double* op = out.px(y, xx);
      for (int k = 0; k < x.c; ++k)
        op[k] = p.bias[k] + p.scale[k] * (px[k] - mean[k]) * inv_std[k];
    }
  if (cache) {
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

struct InstNormGrads {
  Tensor d_input;
  std::vector<double> d_scale, d_bias;
};

inline InstNormGrads instance_norm_grad(const Tensor& x, const NormParams& p,
                                        const InstNormCache& cache, const Tensor& up) {
  check_same_shape(x, up, "instance_norm_grad");
  const int n = x.h * x.w;
  InstNormGrads g{Tensor(x.h, x.w, x.c), std::vector<double>(x.c, 0.0),
                  std::vector<double>(x.c, 0.0)};
  // Per-channel sums of upstream and upstream * xhat.
  std::vector<double> sum_up(x.c, 0.0), sum_up_xhat(x.c, 0.0);
  for (int y = 0; y < x.h; ++y)
    for (int xx = 0; xx < x.w; ++xx) {
      const double* px = x.px(y, xx);
      const double* upp = up.px(y, xx);
      for (int k = 0; k < x.c; ++k) {
        const double xhat = (px[k] - cache.mean[k]) * cache.inv_std[k];
        sum_up[k] += upp[k];
        sum_up_xhat[k] += upp[k] * xhat;
      }
    }
  for (int k = 0; k < x.c; ++k) {
    g.d_bias[k] = sum_up[k];
    g.d_scale[k] = sum_up_xhat[k];
  }
  for (int y = 0; y < x.h; ++y)
    for (int xx = 0; xx < x.w; ++xx) {
      const double* px = x.px(y, xx);
      const double* upp = up.px(y, xx);
      double* gp = g.d_input.px(y, xx);
      for (int k = 0; k < x.c; ++k) {
        const double xhat = (px[k] - cache.mean[k]) * cache.inv_std[k];
        gp[k] = p.scale[k] * cache.inv_std[k] *
                (upp[k] - sum_up[k] / n - xhat * sum_up_xhat[k] / n);
      }
    }
  return g;
}

// Non-overlapping mean pooling by an integer factor (requires divisibility).
inline Tensor avg_pool_factor(const Tensor& in, int f) {
  if (f < 1 || in.h % f != 0 || in.w % f != 0)
    throw ConfigError("avg_pool_factor: dims must divide by factor");
  Tensor out(in.h / f, in.w / f, in.c);
  const double inv = 1.0 / (f * f);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double* op = out.px(y, x);
      for (int dy = 0; dy < f; ++dy)
        for (int dx = 0; dx < f; ++dx) {
          const double* ip = in.px(y * f + dy, x * f + dx);
          for (int k = 0; k < in.c; ++k) op[k] += ip[k];
        }
      for (int k = 0; k < in.c; ++k) op[k] *= inv;
    }
  return out;
}

}  // namespace gnet
