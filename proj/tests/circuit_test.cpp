#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gnet/circuit.hpp"
#include "gnet/rng.hpp"

using namespace gnet;

namespace {

Kernel random_nonneg_symmetric_kernel(int e, int k, Rng& rng, double scale) {
  Kernel ker(e, e, k, k, true);
  for (double& w : ker.w) w = rng.uniform(0.0, scale);
  symmetrize_channels(ker);
  return ker;
}

// Independent fine-step Euler integrator written directly against the
// equations with plain loops; shares nothing with the library's tensor ops.
struct OracleSim {
  int h, w, k, e;
  std::vector<double> hs, hf;

  static double convolve(const std::vector<double>& state, const Kernel& ker, int h, int w,
                         int y, int x, int ko) {
    const int r = ker.kh / 2;
    double acc = 0.0;
    for (int dy = 0; dy < ker.kh; ++dy)
      for (int dx = 0; dx < ker.kw; ++dx) {
        const int iy = y + dy - r, ix = x + dx - r;
        if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
        for (int ki = 0; ki < ker.ci; ++ki)
          acc += state[(iy * w + ix) * ker.ci + ki] * ker.at(dy, dx, ki, ko);
      }
    return acc;
  }

  void step(const std::vector<double>& z, const CircuitParams& p, double dt) {
    std::vector<double> ns(hs.size()), nf(hf.size());
    const double e2 = p.epsilon * p.epsilon, s2 = p.sigma * p.sigma;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ko = 0; ko < k; ++ko) {
          const size_t i = (y * w + x) * k + ko;
          const double cs = convolve(hf, p.w_s, h, w, y, x, ko);
          const double cf = convolve(hs, p.w_f, h, w, y, x, ko);
          const double drive = p.xi * z[i] - (p.alpha * hf[i] + p.mu) * cs;
          ns[i] = std::max(hs[i] + (dt / p.eta) * (-e2 * hs[i] + std::max(drive, 0.0)), 0.0);
          nf[i] = std::max(hf[i] + (dt / p.tau) * (-s2 * hf[i] + std::max(p.nu * cf, 0.0)), 0.0);
        }
    hs = std::move(ns);
    hf = std::move(nf);
  }
};

}  // namespace

TEST(CircuitStep, ZeroInputFixedPoint) {
  CircuitParams p;
  p.w_s = Kernel(3, 3, 2, 2, true);
  p.w_f = Kernel(3, 3, 2, 2, true);
  Tensor z(4, 4, 2);
  CircuitState st = make_circuit_state(4, 4, 2);
  for (int i = 0; i < 10; ++i) st = circuit_step(st, z, p, 0.05);
  EXPECT_EQ(max_abs(st.h_s), 0.0);
  EXPECT_EQ(max_abs(st.h_f), 0.0);
}

TEST(CircuitSteadyState, ZeroInputConvergesInOneStep) {
  CircuitParams p;
  p.w_s = Kernel(3, 3, 1, 1, true);
  p.w_f = Kernel(3, 3, 1, 1, true);
  Tensor z(3, 3, 1);
  CircuitState st = run_to_steady_state(z, p, 0.05);
  EXPECT_TRUE(st.converged);
  EXPECT_EQ(st.step_count, 1);
}

TEST(CircuitSteadyState, ZeroKernelClosedForm) {
  CircuitParams p;
  p.xi = 1.7;
  p.epsilon = 1.3;
  p.w_s = Kernel(3, 3, 2, 2, true);
  p.w_f = Kernel(3, 3, 2, 2, true);
  Rng rng(5);
  Tensor z = random_tensor(4, 5, 2, rng, 0.0, 2.0);
  CircuitState st = run_to_steady_state(z, p, circuit_default_dt(p), 1e-10, 100000);
  EXPECT_TRUE(st.converged);
  const double e2 = p.epsilon * p.epsilon;
  for (size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(st.h_s.v[i], p.xi * z.v[i] / e2, 1e-6);
    EXPECT_NEAR(st.h_f.v[i], 0.0, 1e-9);
  }
}

TEST(CircuitSteadyState, ZeroKernelStableForAnyDtInRegion) {
  CircuitParams p;
  p.eta = 0.7;
  p.epsilon = 1.4;
  p.tau = 1.1;
  p.sigma = 0.9;
  p.xi = 1.0;
  p.w_s = Kernel(1, 1, 1, 1, true);
  p.w_f = Kernel(1, 1, 1, 1, true);
  const double dt_max = std::min(p.eta / (p.epsilon * p.epsilon), p.tau / (p.sigma * p.sigma));
  Tensor z(2, 2, 1, 1.0);
  for (double frac : {0.2, 0.6, 0.95}) {
    CircuitState st = run_to_steady_state(z, p, frac * dt_max, 1e-9, 200000);
    EXPECT_TRUE(st.converged);
    EXPECT_NEAR(st.h_s.at(0, 0, 0), p.xi / (p.epsilon * p.epsilon), 1e-6);
  }
}

TEST(CircuitStep, MatchesFineStepOracle) {
  Rng rng(42);
  CircuitParams p;
  p.eta = 1.0;
  p.tau = 1.2;
  p.epsilon = 1.1;
  p.sigma = 0.9;
  p.xi = 1.5;
  p.alpha = 1.0;
  p.mu = 0.3;
  p.nu = 0.8;
  p.w_s = random_nonneg_symmetric_kernel(3, 2, rng, 0.15);
  p.w_f = random_nonneg_symmetric_kernel(3, 2, rng, 0.15);
  Tensor z = random_tensor(3, 3, 2, rng, 0.0, 1.0);

  CircuitState st = run_to_steady_state(z, p, 0.01, 1e-10, 200000);
  ASSERT_TRUE(st.converged);

  OracleSim sim{3, 3, 2, 3, std::vector<double>(18, 0.0), std::vector<double>(18, 0.0)};
  const int steps = 200000;  // 20 time units at dt = 1e-4
  for (int i = 0; i < steps; ++i) sim.step(z.v, p, 1e-4);

  for (size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(st.h_s.v[i], sim.hs[i], 1e-3);
    EXPECT_NEAR(st.h_f.v[i], sim.hf[i], 1e-3);
  }
}

TEST(CircuitStep, StateNonNegativityPreserved) {
  Rng rng(7);
  CircuitParams p;
  p.alpha = 2.0;
  p.mu = 0.5;
  p.w_s = random_nonneg_symmetric_kernel(3, 2, rng, 0.3);
  p.w_f = random_nonneg_symmetric_kernel(3, 2, rng, 0.3);
  Tensor z = random_tensor(4, 4, 2, rng, 0.0, 2.0);
  CircuitState st = make_circuit_state(4, 4, 2);
  for (int i = 0; i < 300; ++i) {
    st = circuit_step(st, z, p, 0.05);
    for (double v : st.h_s.v) ASSERT_GE(v, 0.0);
    for (double v : st.h_f.v) ASSERT_GE(v, 0.0);
  }
}

TEST(CircuitStep, HalvingDtGivesFirstOrderConsistency) {
  Rng rng(11);
  CircuitParams p;
  p.mu = 0.2;
  p.nu = 0.9;
  p.w_s = random_nonneg_symmetric_kernel(3, 2, rng, 0.2);
  p.w_f = random_nonneg_symmetric_kernel(3, 2, rng, 0.2);
  Tensor z = random_tensor(3, 3, 2, rng, 0.0, 1.0);

  // Integrate to a fixed horizon T = 2.0 at three resolutions; the trajectory
  // error against the fine reference must shrink at least linearly in dt.
  auto integrate = [&](double dt, long steps) {
    CircuitState st = make_circuit_state(3, 3, 2);
    for (long i = 0; i < steps; ++i) st = circuit_step(st, z, p, dt);
    return st;
  };
  CircuitState ref = integrate(0.0005, 4000);
  CircuitState coarse = integrate(0.04, 50);
  CircuitState fine = integrate(0.02, 100);
  const double e_coarse = std::max(max_abs_diff(coarse.h_s, ref.h_s),
                                   max_abs_diff(coarse.h_f, ref.h_f));
  const double e_fine = std::max(max_abs_diff(fine.h_s, ref.h_s),
                                 max_abs_diff(fine.h_f, ref.h_f));
  EXPECT_LT(e_fine, 0.75 * e_coarse + 1e-12);

  // The converged state itself is a fixed point of the update and barely
  // moves when dt halves.
  CircuitState a = run_to_steady_state(z, p, 0.04, 1e-10, 400000);
  CircuitState b = run_to_steady_state(z, p, 0.02, 1e-10, 400000);
  ASSERT_TRUE(a.converged);
  ASSERT_TRUE(b.converged);
  EXPECT_LT(max_abs_diff(a.h_s, b.h_s), 0.02);
}

// Doubling alpha never increases the suppressed population at any site when
// all other inputs (here the facilitation state feeding the suppression term)
// are held fixed.
TEST(CircuitStep, SuppressionMonotoneInAlpha) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    CircuitParams p;
    p.eta = rng.uniform(0.5, 2.0);
    p.tau = rng.uniform(0.5, 2.0);
    p.epsilon = rng.uniform(0.7, 1.5);
    p.sigma = rng.uniform(0.7, 1.5);
    p.xi = rng.uniform(0.5, 2.0);
    p.alpha = rng.uniform(0.1, 2.0);
    p.mu = rng.uniform(0.0, 1.0);
    p.nu = rng.uniform(0.2, 1.5);
    p.w_s = random_nonneg_symmetric_kernel(3, 2, rng, 0.25);
    p.w_f = random_nonneg_symmetric_kernel(3, 2, rng, 0.25);
    Tensor z = random_tensor(3, 3, 2, rng, 0.0, 1.5);

    CircuitState st = make_circuit_state(3, 3, 2);
    st.h_s = random_tensor(3, 3, 2, rng, 0.0, 1.0);
    st.h_f = random_tensor(3, 3, 2, rng, 0.0, 1.0);
    const double dt = circuit_default_dt(p);

    CircuitParams p2 = p;
    p2.alpha = 2.0 * p.alpha;
    CircuitState a = circuit_step(st, z, p, dt);
    CircuitState b = circuit_step(st, z, p2, dt);
    for (size_t i = 0; i < z.size(); ++i) ASSERT_LE(b.h_s.v[i], a.h_s.v[i] + 1e-12);
  }
}

TEST(Encoder, UniformGrayGivesZeroEnergy) {
  Tensor img(40, 40, 1, 0.5);
  OrientationEncoderConfig cfg;
  cfg.n_orientations = 8;
  Tensor e = encode_idealized_orientations(img, cfg);
  EXPECT_LT(max_abs(e), 1e-10);
}

TEST(Encoder, PreferredChannelRespondsMost) {
  OrientationEncoderConfig cfg;
  cfg.n_orientations = 8;
  cfg.lambda = 9.0;
  const auto prefs = orientation_channel_prefs_deg(8);
  for (int j : {0, 2, 5}) {
    GratingSpec spec;
    spec.canvas = 63;
    spec.r = 31.0;
    spec.lambda = 9.0;
    spec.theta = prefs[j];
    Tensor e = encode_idealized_orientations(render_grating(spec), cfg);
    // Mean response per channel over the central region.
    std::vector<double> mean(8, 0.0);
    int n = 0;
    for (int y = 25; y < 38; ++y)
      for (int x = 25; x < 38; ++x, ++n)
        for (int k = 0; k < 8; ++k) mean[k] += e.at(y, x, k);
    int best = 0;
    for (int k = 1; k < 8; ++k)
      if (mean[k] > mean[best]) best = k;
    EXPECT_EQ(best, j);
  }
}

TEST(Encoder, PopulationVectorRoundTrip) {
  OrientationEncoderConfig cfg;
  cfg.n_orientations = 12;
  cfg.lambda = 9.0;
  const auto prefs = orientation_channel_prefs_deg(12);
  const double half_spacing = 180.0 / (2.0 * 12);
  Rng rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const double theta = rng.uniform(0.0, 180.0);
    GratingSpec spec;
    spec.canvas = 63;
    spec.r = 31.0;
    spec.lambda = 9.0;
    spec.theta = theta;
    spec.phi = rng.uniform(0.0, 2 * kPi);
    Tensor e = encode_idealized_orientations(render_grating(spec), cfg);
    // Average energies over the center block, then decode.
    std::vector<double> pooled(12, 0.0);
    for (int y = 28; y < 35; ++y)
      for (int x = 28; x < 35; ++x)
        for (int k = 0; k < 12; ++k) pooled[k] += e.at(y, x, k);
    const double decoded = decode_population_deg(pooled.data(), prefs);
    EXPECT_LE(std::fabs(fold_orientation_deg(decoded - theta)), half_spacing);
  }
}

TEST(CircuitParams, ValidationRejectsBadTimeConstants) {
  CircuitParams p;
  p.w_s = Kernel(1, 1, 1, 1, true);
  p.w_f = Kernel(1, 1, 1, 1, true);
  p.eta = 0.0;
  Tensor z(2, 2, 1);
  EXPECT_THROW(run_to_steady_state(z, p, 0.01), ConfigError);
}
