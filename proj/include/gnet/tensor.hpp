#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gnet {

inline constexpr double kPi = 3.14159265358979323846;

// Thrown when shapes or settings are inconsistent.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when an iteration produces non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an API is used out of contract (e.g. backward without cache).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

// Dense H x W x C array of doubles, row-major in (y, x, k) order.
struct Tensor {
  int h = 0, w = 0, c = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int h_, int w_, int c_, double fill = 0.0)
      : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, fill) {
    if (h_ < 0 || w_ < 0 || c_ < 0) throw ConfigError("Tensor: negative dims");
  }

  size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }

  double& at(int y, int x, int k) { return v[(static_cast<size_t>(y) * w + x) * c + k]; }
  double at(int y, int x, int k) const { return v[(static_cast<size_t>(y) * w + x) * c + k]; }

  // Pointer to the channel vector at (y, x).
  double* px(int y, int x) { return v.data() + (static_cast<size_t>(y) * w + x) * c; }
  const double* px(int y, int x) const { return v.data() + (static_cast<size_t>(y) * w + x) * c; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b)) throw ConfigError(std::string(where) + ": shape mismatch");
}

inline Tensor operator+(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "tensor add");
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) out.v[i] += b.v[i];
  return out;
}

inline Tensor operator-(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "tensor sub");
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) out.v[i] -= b.v[i];
  return out;
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "hadamard");
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) out.v[i] *= b.v[i];
  return out;
}

inline Tensor scaled(const Tensor& a, double s) {
  Tensor out = a;
  for (double& x : out.v) x *= s;
  return out;
}

inline void add_inplace(Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add_inplace");
  for (size_t i = 0; i < a.size(); ++i) a.v[i] += b.v[i];
}

// a += s * b
inline void axpy_inplace(Tensor& a, double s, const Tensor& b) {
  check_same_shape(a, b, "axpy");
  for (size_t i = 0; i < a.size(); ++i) a.v[i] += s * b.v[i];
}

inline double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double x : a.v) m = std::max(m, std::fabs(x));
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
  return m;
}

inline double l2_norm(const Tensor& a) {
  double s = 0.0;
  for (double x : a.v) s += x * x;
  return std::sqrt(s);
}

inline bool all_finite(const Tensor& a) {
  for (double x : a.v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Convolution kernel, (dy, dx, in, out) row-major with the out channel
// contiguous. `symmetric` marks channel symmetry: w[.,.,k1,k2] == w[.,.,k2,k1]
// (requires ci == co); enforced by symmetrize_channels and by gradient
// symmetrization rather than by storing half the entries.
struct Kernel {
  int kh = 0, kw = 0, ci = 0, co = 0;
  bool symmetric = false;
  std::vector<double> w;

  Kernel() = default;
  Kernel(int kh_, int kw_, int ci_, int co_, bool symmetric_ = false)
      : kh(kh_), kw(kw_), ci(ci_), co(co_), symmetric(symmetric_),
        w(static_cast<size_t>(kh_) * kw_ * ci_ * co_, 0.0) {
    if (symmetric_ && ci_ != co_) throw ConfigError("Kernel: symmetric needs ci == co");
  }

  size_t size() const { return w.size(); }

  double& at(int dy, int dx, int i, int o) {
    return w[((static_cast<size_t>(dy) * kw + dx) * ci + i) * co + o];
  }
  double at(int dy, int dx, int i, int o) const {
    return w[((static_cast<size_t>(dy) * kw + dx) * ci + i) * co + o];
  }
  const double* tap(int dy, int dx, int i) const {
    return w.data() + ((static_cast<size_t>(dy) * kw + dx) * ci + i) * co;
  }
  double* tap(int dy, int dx, int i) {
    return w.data() + ((static_cast<size_t>(dy) * kw + dx) * ci + i) * co;
  }
};

// Projects onto the channel-symmetric subspace: w <- (w + w_chT) / 2.
inline void symmetrize_channels(Kernel& k) {
  if (k.ci != k.co) throw ConfigError("symmetrize_channels: ci != co");
  for (int dy = 0; dy < k.kh; ++dy)
    for (int dx = 0; dx < k.kw; ++dx)
      for (int i = 0; i < k.ci; ++i)
        for (int o = i + 1; o < k.co; ++o) {
          double m = 0.5 * (k.at(dy, dx, i, o) + k.at(dy, dx, o, i));
          k.at(dy, dx, i, o) = m;
          k.at(dy, dx, o, i) = m;
        }
}

inline bool is_channel_symmetric(const Kernel& k, double tol = 0.0) {
  if (k.ci != k.co) return false;
  for (int dy = 0; dy < k.kh; ++dy)
    for (int dx = 0; dx < k.kw; ++dx)
      for (int i = 0; i < k.ci; ++i)
        for (int o = 0; o < k.co; ++o)
          if (std::fabs(k.at(dy, dx, i, o) - k.at(dy, dx, o, i)) > tol) return false;
  return true;
}

// Per-channel scale/bias of instance normalization.
struct NormParams {
  std::vector<double> scale, bias;
  double epsilon = 1e-5;

  NormParams() = default;
  NormParams(int channels, double scale_init, double eps = 1e-5)
      : scale(channels, scale_init), bias(channels, 0.0), epsilon(eps) {
    if (eps <= 0.0) throw ConfigError("NormParams: epsilon must be > 0");
  }
  int channels() const { return static_cast<int>(scale.size()); }
};

}  // namespace gnet
