#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "gnet/rng.hpp"
#include "gnet/tensor.hpp"

namespace gnet {

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Minimal signed difference on the 180-degree-periodic orientation circle,
// folded to (-90, 90].
inline double fold_orientation_deg(double d) {
  d = std::fmod(d, 180.0);
  if (d > 90.0) d -= 180.0;
  if (d <= -90.0) d += 180.0;
  return d;
}

// theta_hat = atan2(s, c) / 2 mapped to [0, 180). s and c estimate
// (sin 2theta, cos 2theta).
inline double decode_orientation_from_sincos(double s, double c) {
  if (s * s + c * c < 1e-12) throw NumericError("decode_orientation: undefined (s, c near zero)");
  double deg = 0.5 * rad2deg(std::atan2(s, c));
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  return deg;
}

// ---------------------------------------------------------------------------
// Grating stimuli. Orientation theta is the stripe direction, measured
// counterclockwise from the positive x-axis (y up); luminance is modulated
// along theta + 90. Values lie in [0, 1] with 0.5 gray outside the disc.

struct GratingSpec {
  int canvas = 500;
  double r = 160.0;       // outer disc radius, px
  double lambda = 60.0;   // wavelength, px
  double theta = 0.0;     // stripe direction, deg in [0, 180)
  double phi = 0.0;       // phase, rad
  std::optional<double> delta_theta;  // surround offset, deg; set => test stimulus

  void validate() const {
    if (r <= 0.0 || r > canvas / 2.0) throw ConfigError("GratingSpec: r out of range");
    if (lambda <= 0.0) throw ConfigError("GratingSpec: lambda must be > 0");
    if (canvas < 2) throw ConfigError("GratingSpec: canvas too small");
    if (delta_theta && (*delta_theta < -90.0 || *delta_theta > 90.0))
      throw ConfigError("GratingSpec: delta_theta out of [-90, 90]");
  }
};

inline Tensor render_grating(const GratingSpec& spec) {
  spec.validate();
  Tensor img(spec.canvas, spec.canvas, 1, 0.5);
  const double cy = (spec.canvas - 1) / 2.0, cx = (spec.canvas - 1) / 2.0;
  const double freq = 2.0 * kPi / spec.lambda;
  const double inner = spec.r / 2.0;

  const double mc = deg2rad(spec.theta + 90.0);
  const double cos_c = std::cos(mc), sin_c = std::sin(mc);
  double cos_s = cos_c, sin_s = sin_c;
  if (spec.delta_theta) {
    const double ms = deg2rad(spec.theta + *spec.delta_theta + 90.0);
    cos_s = std::cos(ms);
    sin_s = std::sin(ms);
  }

  for (int y = 0; y < spec.canvas; ++y) {
    const double yc = cy - y;  // y up
    for (int x = 0; x < spec.canvas; ++x) {
      const double xc = x - cx;
      const double d = std::hypot(xc, yc);
      if (d > spec.r) continue;
      double u;
      if (spec.delta_theta && d > inner)
        u = xc * cos_s + yc * sin_s;
      else
        u = xc * cos_c + yc * sin_c;
      img.at(y, x, 0) = 0.5 + 0.5 * std::sin(freq * u + spec.phi);
    }
  }
  return img;
}

// Training stimuli: single gratings with r, lambda, theta, phi sampled
// uniformly; ranges scale linearly with canvas / 500.
inline std::vector<GratingSpec> sample_training_gratings(int n, uint64_t seed, int canvas = 500) {
  if (n < 1) throw ConfigError("sample_training_gratings: n must be >= 1");
  const double s = canvas / 500.0;
  std::vector<GratingSpec> out;
  out.reserve(n);
  Rng root(seed);
  for (int i = 0; i < n; ++i) {
    Rng rng = root.fork(i);
    GratingSpec g;
    g.canvas = canvas;
    g.r = rng.uniform(80.0, 240.0) * s;
    g.lambda = rng.uniform(30.0, 90.0) * s;
    g.theta = rng.uniform(0.0, 180.0);
    g.phi = rng.uniform(0.0, 2.0 * kPi);
    out.push_back(g);
  }
  return out;
}

// Test stimuli: center grating fixed at 45 degrees, surround offset uniform
// in [-90, 90]; center disc radius is half the surround radius.
inline std::vector<GratingSpec> sample_test_gratings(int n = 1000, uint64_t seed = 0,
                                                     int canvas = 500) {
  if (n < 1) throw ConfigError("sample_test_gratings: n must be >= 1");
  const double s = canvas / 500.0;
  std::vector<GratingSpec> out;
  out.reserve(n);
  Rng root(seed);
  for (int i = 0; i < n; ++i) {
    Rng rng = root.fork(i);
    GratingSpec g;
    g.canvas = canvas;
    g.r = rng.uniform(80.0, 240.0) * s;
    g.lambda = rng.uniform(30.0, 90.0) * s;
    g.theta = 45.0;
    g.phi = rng.uniform(0.0, 2.0 * kPi);
    g.delta_theta = rng.uniform(-90.0, 90.0);
    out.push_back(g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tilt curve: decoded center-orientation bias against surround offset, with a
// fourth-order polynomial fit. Bias uses the repulsion-positive convention:
// positive bias means the decoded center orientation moved away from the
// surround orientation, negative means it moved toward it.

struct TiltCurve {
  std::vector<std::pair<double, double>> samples;  // (delta_theta, bias deg), sorted
  std::array<double, 5> poly_coeffs{};             // c0..c4 over delta_theta in degrees
};

inline double tilt_bias_deg(double decoded_theta, double center_theta, double delta_theta) {
  const double raw = fold_orientation_deg(decoded_theta - center_theta);
  return delta_theta >= 0.0 ? -raw : raw;
}

// Least-squares fit of a degree-4 polynomial. Solved on x/90 for
// conditioning; returned coefficients are in the raw degree domain.
inline std::array<double, 5> polyfit4(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 5) throw ConfigError("polyfit4: need at least 5 samples");
  constexpr int m = 5;
  double a[m][m] = {};
  double b[m] = {};
  for (const auto& [x, y] : pts) {
    const double u = x / 90.0;
    double pw[2 * m - 1];
    pw[0] = 1.0;
    for (int i = 1; i < 2 * m - 1; ++i) pw[i] = pw[i - 1] * u;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) a[i][j] += pw[i + j];
      b[i] += pw[i] * y;
    }
  }
  // Gaussian elimination with partial pivoting.
  int piv[m];
  for (int i = 0; i < m; ++i) piv[i] = i;
  for (int col = 0; col < m; ++col) {
    int best = col;
    for (int r = col + 1; r < m; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[best][col])) best = r;
    if (best != col) {
      for (int j = 0; j < m; ++j) std::swap(a[col][j], a[best][j]);
      std::swap(b[col], b[best]);
    }
    if (std::fabs(a[col][col]) < 1e-300) throw NumericError("polyfit4: singular system");
    for (int r = col + 1; r < m; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int j = col; j < m; ++j) a[r][j] -= f * a[col][j];
      b[r] -= f * b[col];
    }
  }
  std::array<double, 5> c{};
  for (int i = m - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < m; ++j) s -= a[i][j] * c[j];
    c[i] = s / a[i][i];
  }
  // Undo the x/90 scaling.
  double scale = 1.0;
  for (int i = 0; i < m; ++i) {
    c[i] /= scale;
    scale *= 90.0;
  }
  return c;
}

inline double polyeval(const std::array<double, 5>& c, double x) {
  double y = 0.0;
  for (int i = 4; i >= 0; --i) y = y * x + c[i];
  return y;
}

// ---------------------------------------------------------------------------
// Synthetic contour corpus: grayscale images containing 1-4 closed textured
// shapes plus open distractor strokes. Labels mark closed-shape boundary
// pixels only; distractor edges and texture edges inside regions are
// unlabeled. The difficulty knob scales distractor density, texture contrast
// and noise.

struct ContourSample {
  Tensor image;  // H x W x 1, values in [0, 1]
  Tensor label;  // H x W x 1, values in {0, 1}
};

namespace detail {

// Star-shaped blob: radius as a smooth function of angle.
struct Blob {
  double cx, cy, base_r;
  double a2, p2, a3, p3;
  double radius(double phi) const {
    return base_r * (1.0 + a2 * std::cos(2.0 * phi + p2) + a3 * std::cos(3.0 * phi + p3));
  }
  double max_radius() const { return base_r * (1.0 + a2 + a3); }
  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double d = std::hypot(dx, dy);
    if (d < 1e-9) return true;
    return d < radius(std::atan2(dy, dx));
  }
};

inline void mark_curve_pixel(Tensor& label, int canvas, double x, double y) {
  const int xi = static_cast<int>(std::lround(x));
  const int yi = static_cast<int>(std::lround(y));
  if (xi >= 0 && xi < canvas && yi >= 0 && yi < canvas) label.at(yi, xi, 0) = 1.0;
}

}  // namespace detail

inline std::vector<ContourSample> synth_contours(int n, double difficulty, uint64_t seed,
                                                 int canvas = 96) {
  if (n < 1) throw ConfigError("synth_contours: n must be >= 1");
  difficulty = std::clamp(difficulty, 0.0, 1.0);
  std::vector<ContourSample> out;
  out.reserve(n);
  Rng root(seed);

  for (int idx = 0; idx < n; ++idx) {
    Rng rng = root.fork(idx);
    Tensor img(canvas, canvas, 1, 0.5);
    Tensor label(canvas, canvas, 1, 0.0);

    // Place disjoint blobs.
    const int want_shapes = rng.uniform_int(1, 4);
    std::vector<detail::Blob> blobs;
    for (int s = 0; s < want_shapes; ++s) {
      for (int attempt = 0; attempt < 60; ++attempt) {
        detail::Blob b;
        b.base_r = rng.uniform(9.0, 0.20 * canvas);
        const double margin = b.max_radius() + 2.0;
        b.cx = rng.uniform(margin, canvas - margin);
        b.cy = rng.uniform(margin, canvas - margin);
        b.a2 = rng.uniform(0.0, 0.28);
        b.p2 = rng.uniform(0.0, 2 * kPi);
        b.a3 = rng.uniform(0.0, 0.14);
        b.p3 = rng.uniform(0.0, 2 * kPi);
        bool ok = true;
        for (const auto& other : blobs) {
          const double d = std::hypot(b.cx - other.cx, b.cy - other.cy);
          if (d < b.max_radius() + other.max_radius() + 4.0) {
            ok = false;
            break;
          }
        }
        if (ok) {
          blobs.push_back(b);
          break;
        }
      }
    }

    // Fill interiors: mean-luminance shift plus an oriented grating texture.
    for (const auto& b : blobs) {
      const double shift = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.16, 0.28);
      const double tex_amp = rng.uniform(0.05, 0.10) + 0.10 * difficulty;
      const double tex_lambda = rng.uniform(4.0, 9.0);
      const double tex_theta = deg2rad(rng.uniform(0.0, 180.0));
      const double tex_phi = rng.uniform(0.0, 2 * kPi);
      const double cm = std::cos(tex_theta + kPi / 2), sm = std::sin(tex_theta + kPi / 2);
      const int x0 = std::max(0, static_cast<int>(b.cx - b.max_radius() - 1));
      const int x1 = std::min(canvas - 1, static_cast<int>(b.cx + b.max_radius() + 1));
      const int y0 = std::max(0, static_cast<int>(b.cy - b.max_radius() - 1));
      const int y1 = std::min(canvas - 1, static_cast<int>(b.cy + b.max_radius() + 1));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
          if (b.contains(x, y)) {
            const double u = x * cm + y * sm;
            img.at(y, x, 0) =
                0.5 + shift + tex_amp * std::sin(2 * kPi * u / tex_lambda + tex_phi);
          }
    }

    // Boundary labels from dense parametric sampling.
    for (const auto& b : blobs) {
      const int steps = std::max(64, static_cast<int>(8.0 * b.max_radius()));
      for (int s = 0; s < steps; ++s) {
        const double phi = 2 * kPi * s / steps;
        const double r = b.radius(phi);
        detail::mark_curve_pixel(label, canvas, b.cx + r * std::cos(phi),
                                 b.cy + r * std::sin(phi));
      }
    }

    // Open distractor strokes: circular arcs and line segments whose local
    // contrast matches the region edges. Points inside shapes are skipped so
    // strokes never overwrite boundaries.
    const int n_distract = rng.uniform_int(1, 2 + static_cast<int>(std::lround(4 * difficulty)));
    auto inside_any = [&](double x, double y) {
      for (const auto& b : blobs)
        if (b.contains(x, y)) return true;
      return false;
    };
    for (int dcurve = 0; dcurve < n_distract; ++dcurve) {
      const double amp = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.16, 0.28);
      if (rng.uniform() < 0.5) {
        // Arc.
        const double acx = rng.uniform(0.0, canvas), acy = rng.uniform(0.0, canvas);
        const double ar = rng.uniform(8.0, 0.4 * canvas);
        const double a0 = rng.uniform(0.0, 2 * kPi);
        const double span = deg2rad(rng.uniform(70.0, 280.0));
        const int steps = std::max(32, static_cast<int>(ar * span));
        for (int s = 0; s <= steps; ++s) {
          const double a = a0 + span * s / steps;
          const double x = acx + ar * std::cos(a), y = acy + ar * std::sin(a);
          const int xi = static_cast<int>(std::lround(x)), yi = static_cast<int>(std::lround(y));
          if (xi < 0 || xi >= canvas || yi < 0 || yi >= canvas) continue;
          if (inside_any(x, y)) continue;
          img.at(yi, xi, 0) = std::clamp(0.5 + amp, 0.0, 1.0);
        }
      } else {
        // Segment.
        const double x0 = rng.uniform(0.0, canvas), y0 = rng.uniform(0.0, canvas);
        const double ang = rng.uniform(0.0, 2 * kPi);
        const double len = rng.uniform(0.2 * canvas, 0.8 * canvas);
        const int steps = static_cast<int>(len * 2);
        for (int s = 0; s <= steps; ++s) {
          const double x = x0 + std::cos(ang) * len * s / steps;
          const double y = y0 + std::sin(ang) * len * s / steps;
          const int xi = static_cast<int>(std::lround(x)), yi = static_cast<int>(std::lround(y));
          if (xi < 0 || xi >= canvas || yi < 0 || yi >= canvas) continue;
          if (inside_any(x, y)) continue;
          img.at(yi, xi, 0) = std::clamp(0.5 + amp, 0.0, 1.0);
        }
      }
    }

    // Pixel noise.
    const double noise_sd = 0.008 + 0.02 * difficulty;
    for (double& v : img.v) v = std::clamp(v + noise_sd * rng.normal(), 0.0, 1.0);

    out.push_back(ContourSample{std::move(img), std::move(label)});
  }
  return out;
}

}  // namespace gnet
