#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gnet/tensor.hpp"

namespace gnet {

// Deterministic RNG. Distributions are hand-rolled on top of mt19937_64 so
// streams do not depend on standard-library distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(gen_() % span);
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent sub-stream; stable under changes to how much the parent drew.
  Rng fork(uint64_t stream) const {
    std::mt19937_64 copy = gen_;
    uint64_t base = copy();
    return Rng(base ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline Tensor random_tensor(int h, int w, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(h, w, c);
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

inline Kernel random_kernel(int kh, int kw, int ci, int co, Rng& rng, double scale = 0.5) {
  Kernel k(kh, kw, ci, co);
  for (double& x : k.w) x = rng.uniform(-scale, scale);
  return k;
}

}  // namespace gnet
