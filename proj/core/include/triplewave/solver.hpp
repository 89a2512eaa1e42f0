#pragma once

// Finite-difference time-domain solver for
//   alpha(y)^2 u_tt - sum_jk h_jk(y) u_{x_j x_k} = Y(y) f(y, u)
// with superposed traveling-wave initial data, in 1, 2, or 3 space
// dimensions. Explicit second-order leapfrog; deterministic.

#include <array>
#include <cstdint>

#include "triplewave/scenarios.hpp"

namespace triplewave {

/// Uniform spatial grid: `nx[i]` cells along axis i, spacing h, lower corner lo.
struct Grid {
  int d = 2;  // space dimensions (= spacetime dim - 1)
  std::array<int, 3> nx{0, 0, 0};
  double h = 0.01;
  Vec lo;

  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(nx[i]);
    return s;
  }
  std::size_t index(int i, int j = 0, int k = 0) const {
    std::size_t idx = static_cast<std::size_t>(i);
    if (d > 1) idx = idx * nx[1] + j;
    if (d > 2) idx = idx * nx[2] + k;
    return idx;
  }
  /// Spatial coordinates of node (i, j, k).
  Vec coords(int i, int j = 0, int k = 0) const;
  static Grid square(int d, int n_per_axis, double half_width);
};

/// 1-D profile a wave rides on. Kinds:
///   xplus        — x_+^k mollified by a Gaussian of scale eps/4.5 (closed
///                  form via the Gaussian one-sided moment functions), cut
///                  smoothly to exact zero below -eps (a relative change of
///                  order 1e-4 of an already negligible tail) and confined by
///                  a Gaussian envelope exp(-(phi/width)^2);
///   smoothed_jump— a smoothed Heaviside step (k = 0 case of the above);
///   band_limited — inverse cosine transform of <eta>^m restricted to a band
///                  (no support constraint; used for order experiments only).
/// x_+-type profiles vanish identically for phi <= -eps and their Fourier
/// transform decays like |eta|^{-k-1} over resolved_band(): frequencies low
/// enough that the mollifier biases the local slope by less than 0.15 and
/// high enough that the envelope bulk and the finite domain do not distort
/// it. The envelope (rather than a compact one-sided taper) is what makes
/// that promise hold: its spectrum dies super-polynomially, so the kink tail
/// dominates throughout the band.
struct ConormalProfile {
  enum class Kind { xplus, smoothed_jump, band_limited };
  Kind kind = Kind::xplus;
  double k = 4.0;        // xplus order (integer 0..5 supported in closed form)
  double m = -5.0;       // band_limited target symbol order
  double eps = 0.03;     // regularization width
  double width = 1.0;    // Gaussian envelope scale (packet extent ~ 3 width)
  double amplitude = 1.0;

  double operator()(double phi) const;
  /// [eta_lo, eta_hi] over which the decay exponent is trustworthy on spacing h.
  std::pair<double, double> resolved_band(double domain_len) const;
};

/// Right-hand side data: f(y, u), the cutoff Y (smooth, vanishing for t < -1),
/// and the third u-derivative of f on the meeting locus for predictions.
/// The stepper precomputes the cutoff's spatial support once at a large probe
/// time, so a cutoff must attain its maximal spatial support at large t
/// (make_cutoff satisfies this: its spatial factor is time-independent and
/// its ramp is monotone in t).
struct Nonlinearity {
  enum class Kind { none, cubic, quadratic, custom };
  Kind kind = Kind::none;
  std::function<double(const Vec&, double)> f;       // used when kind == custom
  std::function<double(const Vec&)> cutoff;          // Y(y); empty means Y == 1
  std::function<double(const Vec&)> d3f_on_gamma;    // optional

  static Nonlinearity none();
  static Nonlinearity cubic(std::function<double(const Vec&)> cutoff);
  static Nonlinearity quadratic(std::function<double(const Vec&)> cutoff);
};

/// Smooth compactly-supported cutoff Y(t, x) = ramp(t) * bump(|x|):
/// identically 0 for t <= t_on, 1 for t >= t_on + ramp_len (C-infinity ramp),
/// times a plateau bump equal to 1 for |x| <= r_in and 0 for |x| >= r_out.
std::function<double(const Vec&)> make_cutoff(double t_on, double ramp_len, double r_in,
                                              double r_out);

/// Solution snapshots at recorded times plus bookkeeping.
struct GridField {
  Grid grid;
  std::vector<double> times;
  std::vector<std::vector<double>> data;   // one flat array per recorded time
  std::vector<double> energy;              // discrete energy at recorded times
  double cfl = 0.0;
  double dt = 0.0;
  std::string bc;

  const std::vector<double>& at_time(double t, double tol = 1e-9) const;
};

inline constexpr double kCflMax = 0.5;

struct SolveOptions {
  Grid grid;
  double t0 = -2.0;
  double cfl = 0.4;
  int threads = 1;
  std::vector<double> record_times;
  /// "exact-linear": time-dependent Dirichlet values from the exact linear
  /// superposition (default; keeps plane waves exact at the boundary).
  /// "zero": homogeneous Dirichlet. "sponge": zero plus an absorbing margin.
  std::string bc = "exact-linear";
  int sponge_cells = 24;
};

/// Exact traveling-wave value of one profile riding on a plane or cone
/// surface at spacetime point y (plane: profile(phi); cone: profile(phi)/r in
/// n=4, profile(phi) in other dimensions where it is only approximately exact
/// and rejected for initial data).
double traveling_wave_value(const CharSurface& surf, const ConormalProfile& prof, const Vec& y);

/// u at t0 and t0 + dt sampled from the exact superposition of the three
/// traveling waves. Throws UnsupportedError for generic (non plane/cone)
/// surfaces and ArgumentError when eps < 4h.
std::pair<std::vector<double>, std::vector<double>> synthesize_initial_data(
    const Scenario& sc, const std::array<ConormalProfile, 3>& profiles, const Grid& grid,
    double t0, double dt);

/// One leapfrog update: writes u_next = 2 u_cur - u_prev + dt^2 * alpha^{-2}
/// (sum h_jk D_j D_k u_cur + Y f(y, u_cur)). Interior only; boundary values
/// are handled by the caller/run(). Throws ArgumentError when dt exceeds
/// kCflMax * h / c_max.
class Stepper {
 public:
  Stepper(const Scenario& sc, const Grid& grid, Nonlinearity nl, double dt, int threads = 1);

  void step(const std::vector<double>& u_prev, const std::vector<double>& u_cur,
            std::vector<double>& u_next, double t_cur) const;

  double max_speed() const { return c_max_; }

 private:
  // Coefficients are sampled once at t = 0 (all built-in scenarios are
  // time-independent); the cutoff's spatial support is sampled at a late time.
  const Grid grid_;
  Nonlinearity nl_;
  double dt_;
  int threads_;
  double c_max_ = 1.0;
  int dim_;
  bool constant_identity_metric_ = true;
  std::vector<double> inv_alpha2_;          // per cell
  std::vector<std::vector<double>> hdiag_;  // per-axis diagonal metric entries
  std::vector<double> hoff_;                // 2D off-diagonal h_12 when present
  bool diagonal_metric_ = true;
  std::vector<uint8_t> cut_support_;        // cells where the cutoff can be nonzero
};

/// Full experiment run: synthesize initial data, step to T_end, record
/// snapshots and discrete energies at `record_times`. Aborts with
/// NumericError at the first non-finite value.
GridField run(const Scenario& sc, const std::array<ConormalProfile, 3>& profiles,
              const Nonlinearity& nl, double T_end, const SolveOptions& opt);

/// Staggered discrete energy of two consecutive time levels (u^n, u^{n+1}):
/// 1/2 ||(u^{n+1}-u^n)/dt||^2 + 1/2 <D u^n, D u^{n+1}> summed over grid faces.
/// This is the exact invariant of the interior unit-coefficient leapfrog
/// update, so it holds to round-off while the support stays interior.
double discrete_energy(const Grid& grid, const std::vector<double>& u_a,
                       const std::vector<double>& u_b, double dt);

}  // namespace triplewave
