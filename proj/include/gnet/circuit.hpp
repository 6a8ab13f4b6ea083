#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gnet/ops.hpp"
#include "gnet/stimuli.hpp"
#include "gnet/tensor.hpp"

namespace gnet {

// ---------------------------------------------------------------------------
// Hand-parameterized two-population circuit over a hypercolumn grid:
//
//   eta * dHs/dt + epsilon^2 * Hs = [xi*Z - (alpha*Hf + mu) .* (Ws * Hf)]+
//   tau * dHf/dt + sigma^2 * Hf  = [nu * (Wf * Hs)]+
//
// The suppression stage is convolved with the facilitation population and
// vice versa (crossed wiring, kept as printed). Integration is forward Euler
// from the pre-step state with explicit post-rectification, so both
// populations stay non-negative. Connectivity kernels are non-negative.

struct CircuitParams {
  double eta = 1.0, epsilon = 1.0, tau = 1.0, sigma = 1.0;
  double xi = 1.0;    // feedforward gain
  double alpha = 1.0; // shunting (multiplicative) suppression
  double mu = 0.0;    // linear suppression
  double nu = 1.0;    // linear facilitation
  Kernel w_s, w_f;    // E x E x K x K, channel-symmetric

  void validate() const {
    if (eta <= 0.0 || tau <= 0.0) throw ConfigError("CircuitParams: eta, tau must be > 0");
    if (epsilon == 0.0 || sigma == 0.0) throw ConfigError("CircuitParams: epsilon, sigma must be nonzero");
    if (!is_channel_symmetric(w_s, 1e-12) || !is_channel_symmetric(w_f, 1e-12))
      throw ConfigError("CircuitParams: kernels must be channel-symmetric");
  }
};

struct CircuitState {
  Tensor h_s, h_f;
  long step_count = 0;
  bool converged = false;
};

inline CircuitState make_circuit_state(int h, int w, int c) {
  return CircuitState{Tensor(h, w, c), Tensor(h, w, c), 0, false};
}

inline double circuit_default_dt(const CircuitParams& p) {
  return 0.05 * std::min(p.eta / (p.epsilon * p.epsilon), p.tau / (p.sigma * p.sigma));
}

inline CircuitState circuit_step(const CircuitState& state, const Tensor& z,
                                 const CircuitParams& p, double dt) {
  if (dt <= 0.0) throw ConfigError("circuit_step: dt must be > 0");
  check_same_shape(state.h_s, z, "circuit_step");
  check_same_shape(state.h_f, z, "circuit_step");

  const Tensor cs = conv2d(state.h_f, p.w_s);  // suppression interactions
  const Tensor cf = conv2d(state.h_s, p.w_f);  // facilitation interactions

  CircuitState next;
  next.h_s = state.h_s;
  next.h_f = state.h_f;
  next.step_count = state.step_count + 1;

  const double e2 = p.epsilon * p.epsilon, s2 = p.sigma * p.sigma;
  const double rs = dt / p.eta, rf = dt / p.tau;
  for (size_t i = 0; i < z.size(); ++i) {
    const double drive = p.xi * z.v[i] - (p.alpha * state.h_f.v[i] + p.mu) * cs.v[i];
    const double rhs_s = -e2 * state.h_s.v[i] + std::max(drive, 0.0);
    const double rhs_f = -s2 * state.h_f.v[i] + std::max(p.nu * cf.v[i], 0.0);
    next.h_s.v[i] = std::max(state.h_s.v[i] + rs * rhs_s, 0.0);
    next.h_f.v[i] = std::max(state.h_f.v[i] + rf * rhs_f, 0.0);
  }
  if (!all_finite(next.h_s) || !all_finite(next.h_f))
    throw NumericError("circuit integration diverged at step " + std::to_string(next.step_count));
  return next;
}

// Iterates until the max elementwise change per step drops below tol or
// max_steps is hit; the final state is returned either way with the
// convergence flag set accordingly.
inline CircuitState run_to_steady_state(const Tensor& z, const CircuitParams& p, double dt,
                                        double tol = 1e-6, long max_steps = 10000) {
  if (tol <= 0.0) throw ConfigError("run_to_steady_state: tol must be > 0");
  p.validate();
  CircuitState state = make_circuit_state(z.h, z.w, z.c);
  for (long i = 0; i < max_steps; ++i) {
    CircuitState next = circuit_step(state, z, p, dt);
    const double delta = std::max(max_abs_diff(next.h_s, state.h_s),
                                  max_abs_diff(next.h_f, state.h_f));
    state = std::move(next);
    if (delta < tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

// ---------------------------------------------------------------------------
// Idealized orientation encoding: quadrature pairs of oriented band-pass
// filters at K evenly spaced preferred orientations over [0, 180). The even
// filter is zero-meaned so uniform images produce zero energy.

struct OrientationEncoderConfig {
  int n_orientations = 12;
  double lambda = 9.0;              // carrier wavelength, px
  double sigma_across_factor = 0.35;  // envelope across stripes / lambda
  double sigma_along_factor = 0.70;   // envelope along stripes / lambda
};

inline std::vector<double> orientation_channel_prefs_deg(int k) {
  std::vector<double> prefs(k);
  for (int i = 0; i < k; ++i) prefs[i] = 180.0 * i / k;
  return prefs;
}

inline Tensor encode_idealized_orientations(const Tensor& image,
                                            const OrientationEncoderConfig& cfg) {
  if (image.c != 1) throw ConfigError("encode_idealized_orientations: grayscale input required");
  const int k = cfg.n_orientations;
  // Work on a zero-mean copy so the zero padding does not read as a border
  // edge and uniform images produce exactly zero energy.
  Tensor centered = image;
  double img_mean = 0.0;
  for (double v : centered.v) img_mean += v;
  img_mean /= static_cast<double>(centered.size());
  for (double& v : centered.v) v -= img_mean;
  const double s_across = cfg.sigma_across_factor * cfg.lambda;
  const double s_along = cfg.sigma_along_factor * cfg.lambda;
  const int radius = static_cast<int>(std::ceil(2.2 * std::max(s_across, s_along)));
  const int fsz = 2 * radius + 1;

  Kernel bank(fsz, fsz, 1, 2 * k);  // channel 2j = even, 2j+1 = odd
  const auto prefs = orientation_channel_prefs_deg(k);
  for (int j = 0; j < k; ++j) {
    const double theta = deg2rad(prefs[j]);       // stripe direction
    const double m = theta + kPi / 2.0;           // modulation direction
    double even_sum = 0.0, odd_sum = 0.0;
    for (int dy = 0; dy < fsz; ++dy)
      for (int dx = 0; dx < fsz; ++dx) {
        const double x = dx - radius;
        const double y = radius - dy;  // y up, matching the stimulus convention
        const double um = x * std::cos(m) + y * std::sin(m);
        const double ut = x * std::cos(theta) + y * std::sin(theta);
        const double env = std::exp(-um * um / (2 * s_across * s_across) -
                                    ut * ut / (2 * s_along * s_along));
        const double carrier = 2 * kPi * um / cfg.lambda;
        bank.at(dy, dx, 0, 2 * j) = env * std::cos(carrier);
        bank.at(dy, dx, 0, 2 * j + 1) = env * std::sin(carrier);
        even_sum += bank.at(dy, dx, 0, 2 * j);
        odd_sum += bank.at(dy, dx, 0, 2 * j + 1);
      }
    // Remove DC and normalize to unit L2.
    double even_nrm = 0.0, odd_nrm = 0.0;
    for (int dy = 0; dy < fsz; ++dy)
      for (int dx = 0; dx < fsz; ++dx) {
        bank.at(dy, dx, 0, 2 * j) -= even_sum / (fsz * fsz);
        bank.at(dy, dx, 0, 2 * j + 1) -= odd_sum / (fsz * fsz);
        even_nrm += bank.at(dy, dx, 0, 2 * j) * bank.at(dy, dx, 0, 2 * j);
        odd_nrm += bank.at(dy, dx, 0, 2 * j + 1) * bank.at(dy, dx, 0, 2 * j + 1);
      }
    even_nrm = std::sqrt(even_nrm);
    odd_nrm = std::sqrt(odd_nrm);
    for (int dy = 0; dy < fsz; ++dy)
      for (int dx = 0; dx < fsz; ++dx) {
        bank.at(dy, dx, 0, 2 * j) /= even_nrm;
        bank.at(dy, dx, 0, 2 * j + 1) /= odd_nrm;
      }
  }

  const Tensor resp = conv2d(centered, bank);
  Tensor energy(image.h, image.w, k);
  for (int y = 0; y < image.h; ++y)
    for (int x = 0; x < image.w; ++x) {
      const double* rp = resp.px(y, x);
      double* ep = energy.px(y, x);
      for (int j = 0; j < k; ++j)
        ep[j] = std::sqrt(rp[2 * j] * rp[2 * j] + rp[2 * j + 1] * rp[2 * j + 1]);
    }
  return energy;
}

// Circular population vector on 2*theta over the channel energies.
inline double decode_population_deg(const double* energies, const std::vector<double>& prefs) {
  double s = 0.0, c = 0.0;
  for (size_t j = 0; j < prefs.size(); ++j) {
    const double a = deg2rad(2.0 * prefs[j]);
    s += energies[j] * std::sin(a);
    c += energies[j] * std::cos(a);
  }
  return decode_orientation_from_sincos(s, c);
}

// ---------------------------------------------------------------------------
// Orientation-tilt demonstration: a center/surround grating is encoded into
// orientation channels, average-pooled onto a hypercolumn grid, and
// integrated to steady state. The decoded bias of the suppressed population
// at the center cell is reported with the repulsion-positive convention.
//
// Channel couplings are Gaussians in the circular orientation distance
// (sigma 30 deg). Because the crossed wiring drives suppression from the
// facilitation population, whose content is rotated 90 deg by the
// near-orthogonal W_F coupling, W_S carries both a similar-orientation and an
// orthogonal component: the orthogonal component lands suppression on
// channels similar to the surround (repulsion at small offsets), while the
// similar component lands it on the opposite flank (attraction at large
// offsets).

struct CircuitTiltConfig {
  int canvas = 72;
  int pool = 3;  // hypercolumn grid = canvas / pool
  int n_orientations = 12;
  double stim_lambda = 9.0;
  double stim_radius_frac = 0.46;  // surround radius / canvas
  double center_theta = 45.0;

  int extent = 9;  // kernel spatial extent on the pooled grid (odd)
  double chan_sigma_deg = 30.0;
  double ws_similar_gain = 0.5;
  double ws_orth_gain = 1.0;
  double wf_orth_gain = 1.0;
  double spatial_sigma = 2.5;  // grid units

  double xi = 1.0, alpha = 2.0, mu = 0.5, nu = 1.0;
  double eta = 1.0, tau = 1.0, epsilon = 1.0, sigma = 1.0;
  double tol = 1e-6;
  long max_steps = 10000;
};

namespace detail {

inline double orientation_distance_deg(double a, double b) {
  double d = std::fabs(std::fmod(a - b, 180.0));
  if (d > 90.0) d = 180.0 - d;
  return d;
}

// w(dy, dx, k1, k2) = spatial Gaussian * channel profile; rows are normalized
// so each output channel's total incoming weight equals `gain`.
inline Kernel build_coupling_kernel(int extent, int k, double spatial_sigma,
                                    double similar_gain, double orth_gain,
                                    double chan_sigma_deg, double gain) {
  Kernel ker(extent, extent, k, k, true);
  const auto prefs = orientation_channel_prefs_deg(k);
  const int r = extent / 2;
  for (int dy = 0; dy < extent; ++dy)
    for (int dx = 0; dx < extent; ++dx) {
      const double d2 = (dy - r) * (dy - r) + (dx - r) * (dx - r);
      const double sp = std::exp(-d2 / (2 * spatial_sigma * spatial_sigma));
      for (int k1 = 0; k1 < k; ++k1)
        for (int k2 = 0; k2 < k; ++k2) {
          const double d = orientation_distance_deg(prefs[k1], prefs[k2]);
          const double sim = std::exp(-d * d / (2 * chan_sigma_deg * chan_sigma_deg));
          const double orth =
              std::exp(-(90.0 - d) * (90.0 - d) / (2 * chan_sigma_deg * chan_sigma_deg));
          ker.at(dy, dx, k1, k2) = sp * (similar_gain * sim + orth_gain * orth);
        }
    }
  // Normalize total incoming weight per channel.
  std::vector<double> colsum(k, 0.0);
  for (int dy = 0; dy < extent; ++dy)
    for (int dx = 0; dx < extent; ++dx)
      for (int k1 = 0; k1 < k; ++k1)
        for (int k2 = 0; k2 < k; ++k2) colsum[k2] += ker.at(dy, dx, k1, k2);
  for (int dy = 0; dy < extent; ++dy)
    for (int dx = 0; dx < extent; ++dx)
      for (int k1 = 0; k1 < k; ++k1)
        for (int k2 = 0; k2 < k; ++k2)
          if (colsum[k2] > 0.0) ker.at(dy, dx, k1, k2) *= gain / colsum[k2];
  symmetrize_channels(ker);
  return ker;
}

}  // namespace detail

inline CircuitParams build_tilt_circuit(const CircuitTiltConfig& cfg) {
  CircuitParams p;
  p.eta = cfg.eta;
  p.tau = cfg.tau;
  p.epsilon = cfg.epsilon;
  p.sigma = cfg.sigma;
  p.xi = cfg.xi;
  p.alpha = cfg.alpha;
  p.mu = cfg.mu;
  p.nu = cfg.nu;
  p.w_s = detail::build_coupling_kernel(cfg.extent, cfg.n_orientations, cfg.spatial_sigma,
                                        cfg.ws_similar_gain, cfg.ws_orth_gain,
                                        cfg.chan_sigma_deg, 1.0);
  p.w_f = detail::build_coupling_kernel(cfg.extent, cfg.n_orientations, cfg.spatial_sigma,
                                        0.0, cfg.wf_orth_gain, cfg.chan_sigma_deg, 1.0);
  return p;
}

// Encodes the stimulus onto the hypercolumn grid, normalized so the largest
// channel energy is 1.
inline Tensor tilt_demo_encoding(double delta_theta_deg, const CircuitTiltConfig& cfg) {
  GratingSpec spec;
  spec.canvas = cfg.canvas;
  spec.r = cfg.stim_radius_frac * cfg.canvas;
  spec.lambda = cfg.stim_lambda;
  spec.theta = cfg.center_theta;
  spec.phi = 0.0;
  spec.delta_theta = delta_theta_deg;

  OrientationEncoderConfig enc;
  enc.n_orientations = cfg.n_orientations;
  enc.lambda = cfg.stim_lambda;
  Tensor energy = encode_idealized_orientations(render_grating(spec), enc);
  Tensor z = avg_pool_factor(energy, cfg.pool);
  const double m = max_abs(z);
  if (m > 0.0)
    for (double& v : z.v) v /= m;
  return z;
}

struct TiltDemoResult {
  double bias_deg = 0.0;       // repulsion-positive
  double decoded_deg = 0.0;
  bool converged = false;
  long steps = 0;
};

inline TiltDemoResult circuit_tilt_bias(double delta_theta_deg, const CircuitTiltConfig& cfg) {
  const Tensor z = tilt_demo_encoding(delta_theta_deg, cfg);
  const CircuitParams p = build_tilt_circuit(cfg);
  const double dt = circuit_default_dt(p);
  const CircuitState st = run_to_steady_state(z, p, dt, cfg.tol, cfg.max_steps);

  const int gy = z.h / 2, gx = z.w / 2;
  const auto prefs = orientation_channel_prefs_deg(cfg.n_orientations);
  const double decoded = decode_population_deg(st.h_s.px(gy, gx), prefs);

  TiltDemoResult r;
  r.decoded_deg = decoded;
  r.bias_deg = tilt_bias_deg(decoded, cfg.center_theta, delta_theta_deg);
  r.converged = st.converged;
  r.steps = st.step_count;
  return r;
}

}  // namespace gnet
