#include "triplewave/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "triplewave/fourier.hpp"

namespace triplewave {

namespace {

constexpr double kVanishZ = 4.5;    // Gaussian scale: profile vanishes below -kVanishZ sigma
constexpr double kSqrt2Pi = 2.5066282746310002;
constexpr double kCutProbeTime = 1.0e6;  // cutoff spatial support is sampled here
constexpr int kNanCheckStride = 50;

double gauss_pdf(double z) { return std::exp(-0.5 * z * z) / kSqrt2Pi; }
double gauss_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// One-sided Gaussian moment m_k(z) = E[(z + W)_+^k], W standard normal:
/// m_k(z) = A_k(z) Phi(z) + B_k(z) phi(z) with m_k' = k m_{k-1}.
double gauss_moment(int k, double z) {
  const double F = gauss_cdf(z);
  const double f = gauss_pdf(z);
  const double z2 = z * z;
  switch (k) {
    case 0:
      return F;
    case 1:
      return z * F + f;
    case 2:
      return (z2 + 1.0) * F + z * f;
    case 3:
      return z * (z2 + 3.0) * F + (z2 + 2.0) * f;
    case 4:
      return (z2 * (z2 + 6.0) + 3.0) * F + z * (z2 + 5.0) * f;
    case 5:
      return z * (z2 * (z2 + 10.0) + 15.0) * F + (z2 * (z2 + 9.0) + 8.0) * f;
    default:
      throw ArgumentError("gauss_moment: closed form implemented for k in 0..5");
  }
}

int integer_order(double k) {
  const double r = std::round(k);
  if (!(std::abs(k - r) < 1e-12) || r < 0.0 || r > 5.0)
    throw ArgumentError("ConormalProfile: xplus order k must be an integer in 0..5");
  return static_cast<int>(r);
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Vec Grid::coords(int i, int j, int k) const {
  Vec x(d);
  const int ids[3] = {i, j, k};
  for (int a = 0; a < d; ++a) x[a] = lo[a] + h * ids[a];
  return x;
}

Grid Grid::square(int d, int n_per_axis, double half_width) {
  if (d < 1 || d > 3) throw ArgumentError("Grid::square: dimension must be 1, 2, or 3");
  if (n_per_axis < 8) throw ArgumentError("Grid::square: need at least 8 nodes per axis");
  if (!(half_width > 0.0)) throw ArgumentError("Grid::square: half_width must be positive");
  Grid g;
  g.d = d;
  g.nx = {1, 1, 1};
  for (int a = 0; a < d; ++a) g.nx[a] = n_per_axis;
  g.h = 2.0 * half_width / (n_per_axis - 1);
  g.lo = Vec::Constant(d, -half_width);
  return g;
}

// ---------------------------------------------------------------------------
// ConormalProfile

double ConormalProfile::operator()(double phi) const {
  if (!(eps > 0.0)) throw ArgumentError("ConormalProfile: eps must be positive");
  if (!(width > 0.0)) throw ArgumentError("ConormalProfile: width must be positive");
  if (kind == Kind::band_limited) {
    // (amplitude / pi) * integral over [1, 1/(2 eps)] of <eta>^m cos(eta phi).
    const double lo = 1.0, hi = 1.0 / (2.0 * eps);
    if (hi <= lo) throw ArgumentError("ConormalProfile: band-limited eps too large (band empty)");
    // Simpson count scaled to the number of oscillations of the integrand.
    const double cycles = (hi - lo) * std::abs(phi) / (2.0 * M_PI);
    const int n_iv = std::min(40000, 64 + 2 * static_cast<int>(std::ceil(8.0 * cycles)));
    const double dh = (hi - lo) / (2 * n_iv);
    auto f = [&](double eta) { return std::pow(1.0 + eta * eta, 0.5 * m) * std::cos(eta * phi); };
    double acc = f(lo) + f(hi);
    for (int i = 1; i < 2 * n_iv; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * dh);
    return amplitude * acc * dh / (3.0 * M_PI);
  }

  const int kk = (kind == Kind::smoothed_jump) ? 0 : integer_order(k);
  const double sigma = eps / kVanishZ;
  const double z = phi / sigma;
  if (z <= -kVanishZ) return 0.0;
  double val = std::pow(sigma, kk) * gauss_moment(kk, z);
  // Low-side cut to exact zero over z in [-4.5, -3.5]; the tail there is
  // already below 1e-4 of the peak, so the spectrum is unaffected.
  if (z < -kVanishZ + 1.0) val *= smoothstep_cinf(z + kVanishZ);
  // Gaussian envelope: confines the packet to |phi| <~ 3 width while keeping
  // the envelope's own spectrum (exp(-(eta width)^2/4)) far below the kink
  // tail |eta|^{-k-1} everywhere at and above 2 pi / width, so measured
  // spectral slopes reflect the kink order, not the envelope.
  const double pw = phi / width;
  val *= std::exp(-pw * pw);
  return amplitude * val;
}

std::pair<double, double> ConormalProfile::resolved_band(double domain_len) const {
  if (!(domain_len > 0.0)) throw ArgumentError("resolved_band: domain length must be positive");
  if (kind == Kind::band_limited) {
    // Stay inside the synthesis band [1, 1/(2 eps)] by a safety factor.
    return {2.0, 1.0 / (4.0 * eps)};
  }
  // Below: envelope bulk and finite-domain leakage (the envelope's spectral
  // curvature still bends the local slope near 2 pi / width, so start half an
  // octave higher); above: the mollifier factor exp(-(eta sigma)^2 / 2) adds
  // local log-log slope -(eta sigma)^2, which reaches 0.15 at
  // eta = 0.387 / sigma = 1.742 / eps. The slope promise needs the band to
  // span a few octaves: keep eps well below width / 20 when measuring.
  const double lo = std::max(8.0 * M_PI / domain_len, 3.0 * M_PI / width);
  const double hi = 1.742 / eps;
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Nonlinearity

Nonlinearity Nonlinearity::none() { return {}; }

Nonlinearity Nonlinearity::cubic(std::function<double(const Vec&)> cutoff) {
  Nonlinearity nl;
  nl.kind = Kind::cubic;
  nl.cutoff = std::move(cutoff);
  nl.d3f_on_gamma = [](const Vec&) { return 6.0; };
  return nl;
}

Nonlinearity Nonlinearity::quadratic(std::function<double(const Vec&)> cutoff) {
  Nonlinearity nl;
  nl.kind = Kind::quadratic;
  nl.cutoff = std::move(cutoff);
  nl.d3f_on_gamma = [](const Vec&) { return 0.0; };
  return nl;
}

std::function<double(const Vec&)> make_cutoff(double t_on, double ramp_len, double r_in,
                                              double r_out) {
  if (!(ramp_len > 0.0)) throw ArgumentError("make_cutoff: ramp length must be positive");
  if (!(r_in > 0.0) || !(r_out > r_in))
    throw ArgumentError("make_cutoff: radii must satisfy 0 < r_in < r_out");
  return [=](const Vec& y) {
    const double t = y[0];
    if (t <= t_on) return 0.0;
    const double r = y.tail(y.size() - 1).norm();
    if (r >= r_out) return 0.0;
    const double ramp = smoothstep_cinf((t - t_on) / ramp_len);
    const double bump = 1.0 - smoothstep_cinf((r - r_in) / (r_out - r_in));
    return ramp * bump;
  };
}

// ---------------------------------------------------------------------------
// GridField

const std::vector<double>& GridField::at_time(double t, double tol) const {
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= tol) return data[i];
  std::ostringstream os;
  os << "GridField::at_time: no snapshot at t = " << t << " (recorded:";
  for (double ti : times) os << ' ' << ti;
  os << ")";
  throw ArgumentError(os.str());
}

// ---------------------------------------------------------------------------
// Traveling waves

double traveling_wave_value(const CharSurface& surf, const ConormalProfile& prof, const Vec& y) {
  const double ph = surf.phi(y);
  if (surf.form() == CharSurface::Form::cone && y.size() == 4) {
    const double r = (y.tail(3) - surf.center()).norm();
    if (r < 1e-9) return 0.0;  // the 1/r profile is not meaningful on the axis
    return prof(ph) / r;
  }
  return prof(ph);
}

std::pair<std::vector<double>, std::vector<double>> synthesize_initial_data(
    const Scenario& sc, const std::array<ConormalProfile, 3>& profiles, const Grid& grid,
    double t0, double dt) {
  if (sc.surfaces.size() != 3)
    throw ArgumentError("synthesize_initial_data: scenario must carry three surfaces");
  if (sc.op.dim() != grid.d + 1)
    throw ArgumentError("synthesize_initial_data: operator dimension does not match the grid");
  for (const auto& surf : sc.surfaces) {
    if (surf.form() == CharSurface::Form::generic)
      throw UnsupportedError("synthesize_initial_data: exact data needs plane or cone surfaces");
    if (surf.form() == CharSurface::Form::cone && grid.d != 3)
      throw UnsupportedError(
          "synthesize_initial_data: cone data is exact only in three space dimensions");
  }
  for (const auto& prof : profiles) {
    if (prof.kind != ConormalProfile::Kind::band_limited && prof.eps < 4.0 * grid.h) {
      std::ostringstream os;
      os << "synthesize_initial_data: profile eps = " << prof.eps << " spans fewer than 4 cells"
         << " (h = " << grid.h << ")";
      throw ArgumentError(os.str());
    }
  }

  std::vector<double> u0(grid.size()), u1(grid.size());
  Vec y(grid.d + 1);
  for (int i = 0; i < grid.nx[0]; ++i)
    for (int j = 0; j < std::max(grid.nx[1], 1); ++j)
      for (int l = 0; l < std::max(grid.nx[2], 1); ++l) {
        const Vec x = grid.coords(i, j, l);
        y.tail(grid.d) = x;
        const std::size_t c = grid.index(i, j, l);
        double v0 = 0.0, v1 = 0.0;
        for (int s = 0; s < 3; ++s) {
          y[0] = t0;
          v0 += traveling_wave_value(sc.surfaces[s], profiles[s], y);
          y[0] = t0 + dt;
          v1 += traveling_wave_value(sc.surfaces[s], profiles[s], y);
        }
        u0[c] = v0;
        u1[c] = v1;
      }
  return {std::move(u0), std::move(u1)};
}

// ---------------------------------------------------------------------------
// Stepper

Stepper::Stepper(const Scenario& sc, const Grid& grid, Nonlinearity nl, double dt, int threads)
    : grid_(grid), nl_(std::move(nl)), dt_(dt), threads_(std::max(1, threads)), dim_(grid.d) {
  if (grid.d < 1 || grid.d > 3) throw ArgumentError("Stepper: grid dimension must be 1, 2, or 3");
  if (sc.op.dim() != grid.d + 1)
    throw ArgumentError("Stepper: operator dimension does not match the grid");
  if (!(dt > 0.0)) throw ArgumentError("Stepper: dt must be positive");

  const std::size_t n = grid.size();
  inv_alpha2_.resize(n);
  hdiag_.assign(dim_, std::vector<double>(n));
  if (dim_ == 2) hoff_.resize(n);

  double c_max = 0.0;
  Vec y = Vec::Zero(dim_ + 1);
  for (int i = 0; i < grid.nx[0]; ++i)
    for (int j = 0; j < std::max(grid.nx[1], 1); ++j)
      for (int l = 0; l < std::max(grid.nx[2], 1); ++l) {
        y.tail(dim_) = grid.coords(i, j, l);
        const std::size_t c = grid.index(i, j, l);
        const double a = sc.op.alpha(y);
        const Mat h = sc.op.metric(y);
        inv_alpha2_[c] = 1.0 / (a * a);
        double lam_max;
        if (dim_ == 1) {
          hdiag_[0][c] = h(0, 0);
          lam_max = h(0, 0);
        } else if (dim_ == 2) {
          hdiag_[0][c] = h(0, 0);
          hdiag_[1][c] = h(1, 1);
          hoff_[c] = 0.5 * (h(0, 1) + h(1, 0));
          const double mid = 0.5 * (h(0, 0) + h(1, 1));
          const double rad = std::hypot(0.5 * (h(0, 0) - h(1, 1)), hoff_[c]);
          lam_max = mid + rad;
          if (std::abs(hoff_[c]) > 1e-14) diagonal_metric_ = false;
        } else {
          lam_max = 0.0;
          for (int a2 = 0; a2 < 3; ++a2) {
            hdiag_[a2][c] = h(a2, a2);
            lam_max = std::max(lam_max, h(a2, a2));
            for (int b2 = 0; b2 < 3; ++b2)
              if (a2 != b2 && std::abs(h(a2, b2)) > 1e-12)
                throw UnsupportedError("Stepper: non-diagonal metric unsupported in 3-D");
          }
        }
        c_max = std::max(c_max, std::sqrt(lam_max) / a);
        if (std::abs(a - 1.0) > 1e-14 || std::abs(lam_max - 1.0) > 1e-14)
          constant_identity_metric_ = false;
        for (int a2 = 0; a2 < dim_ && constant_identity_metric_; ++a2)
          if (std::abs(hdiag_[a2][c] - 1.0) > 1e-14) constant_identity_metric_ = false;
      }
  if (!diagonal_metric_) constant_identity_metric_ = false;
  c_max_ = c_max;

  if (dt > kCflMax * grid.h / c_max_ * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "Stepper: dt = " << dt << " violates the CFL bound " << kCflMax * grid.h / c_max_
       << " (c_max = " << c_max_ << ", h = " << grid.h << ")";
    throw ArgumentError(os.str());
  }

  // Spatial support of the cutoff, sampled at a large probe time (see header).
  if (nl_.kind != Nonlinearity::Kind::none && nl_.cutoff) {
    cut_support_.assign(n, 0);
    Vec yp = Vec::Zero(dim_ + 1);
    yp[0] = kCutProbeTime;
    for (int i = 0; i < grid.nx[0]; ++i)
      for (int j = 0; j < std::max(grid.nx[1], 1); ++j)
        for (int l = 0; l < std::max(grid.nx[2], 1); ++l) {
          yp.tail(dim_) = grid.coords(i, j, l);
          cut_support_[grid.index(i, j, l)] = nl_.cutoff(yp) != 0.0 ? 1 : 0;
        }
  }
}

void Stepper::step(const std::vector<double>& u_prev, const std::vector<double>& u_cur,
                   std::vector<double>& u_next, double t_cur) const {
  const std::size_t n = grid_.size();
  if (u_prev.size() != n || u_cur.size() != n)
    throw ArgumentError("Stepper::step: field size does not match the grid");
  u_next.resize(n);

  const double inv_h2 = 1.0 / (grid_.h * grid_.h);
  const double dt2 = dt_ * dt_;
  const bool have_rhs = nl_.kind != Nonlinearity::Kind::none;

  auto rhs_term = [&](std::size_t c, const Vec& y, double u) -> double {
    if (!cut_support_.empty() && !cut_support_[c]) return 0.0;
    double f;
    switch (nl_.kind) {
      case Nonlinearity::Kind::cubic:
        f = u * u * u;
        break;
      case Nonlinearity::Kind::quadratic:
        f = u * u;
        break;
      case Nonlinearity::Kind::custom:
        f = nl_.f ? nl_.f(y, u) : 0.0;
        break;
      default:
        return 0.0;
    }
    const double cut = nl_.cutoff ? nl_.cutoff(y) : 1.0;
    return cut * f;
  };

  if (dim_ == 1) {
    const int n0 = grid_.nx[0];
    Vec y(2);
    y[0] = t_cur;
    for (int i = 1; i < n0 - 1; ++i) {
      const std::size_t c = static_cast<std::size_t>(i);
      const double lap = hdiag_[0][c] * (u_cur[c + 1] - 2.0 * u_cur[c] + u_cur[c - 1]) * inv_h2;
      double rhs = 0.0;
      if (have_rhs) {
        y[1] = grid_.lo[0] + grid_.h * i;
        rhs = rhs_term(c, y, u_cur[c]);
      }
      u_next[c] = 2.0 * u_cur[c] - u_prev[c] + dt2 * inv_alpha2_[c] * (lap + rhs);
    }
    return;
  }

  if (dim_ == 2) {
    const int n0 = grid_.nx[0], n1 = grid_.nx[1];
    parallel_for(static_cast<std::size_t>(n0 - 2), threads_, [&](std::size_t lo, std::size_t hi) {
      Vec y(3);
      y[0] = t_cur;
      for (std::size_t r = lo; r < hi; ++r) {
        const int i = static_cast<int>(r) + 1;
        y[1] = grid_.lo[0] + grid_.h * i;
        const std::size_t row = static_cast<std::size_t>(i) * n1;
        for (int j = 1; j < n1 - 1; ++j) {
          const std::size_t c = row + j;
          const double uc = u_cur[c];
          double lap;
          if (constant_identity_metric_) {
            lap = (u_cur[c + n1] + u_cur[c - n1] + u_cur[c + 1] + u_cur[c - 1] - 4.0 * uc) *
                  inv_h2;
          } else {
            lap = (hdiag_[0][c] * (u_cur[c + n1] - 2.0 * uc + u_cur[c - n1]) +
                   hdiag_[1][c] * (u_cur[c + 1] - 2.0 * uc + u_cur[c - 1])) *
                  inv_h2;
            if (!diagonal_metric_)
              lap += 2.0 * hoff_[c] * 0.25 *
                     (u_cur[c + n1 + 1] - u_cur[c + n1 - 1] - u_cur[c - n1 + 1] +
                      u_cur[c - n1 - 1]) *
                     inv_h2;
          }
          double rhs = 0.0;
          if (have_rhs) {
            y[2] = grid_.lo[1] + grid_.h * j;
            rhs = rhs_term(c, y, uc);
          }
          u_next[c] = 2.0 * uc - u_prev[c] + dt2 * inv_alpha2_[c] * (lap + rhs);
        }
      }
    });
    return;
  }

  const int n0 = grid_.nx[0], n1 = grid_.nx[1], n2 = grid_.nx[2];
  const std::size_t s0 = static_cast<std::size_t>(n1) * n2, s1 = n2;
  parallel_for(static_cast<std::size_t>(n0 - 2), threads_, [&](std::size_t lo, std::size_t hi) {
    Vec y(4);
    y[0] = t_cur;
    for (std::size_t r = lo; r < hi; ++r) {
      const int i = static_cast<int>(r) + 1;
      y[1] = grid_.lo[0] + grid_.h * i;
      for (int j = 1; j < n1 - 1; ++j) {
        y[2] = grid_.lo[1] + grid_.h * j;
        const std::size_t base = static_cast<std::size_t>(i) * s0 + static_cast<std::size_t>(j) * s1;
        for (int l = 1; l < n2 - 1; ++l) {
          const std::size_t c = base + l;
          const double uc = u_cur[c];
          const double lap = (hdiag_[0][c] * (u_cur[c + s0] - 2.0 * uc + u_cur[c - s0]) +
                              hdiag_[1][c] * (u_cur[c + s1] - 2.0 * uc + u_cur[c - s1]) +
                              hdiag_[2][c] * (u_cur[c + 1] - 2.0 * uc + u_cur[c - 1])) *
                             inv_h2;
          double rhs = 0.0;
          if (have_rhs) {
            y[3] = grid_.lo[2] + grid_.h * l;
            rhs = rhs_term(c, y, uc);
          }
          u_next[c] = 2.0 * uc - u_prev[c] + dt2 * inv_alpha2_[c] * (lap + rhs);
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// run()

namespace {

/// Visit every boundary node of the grid (any index at an axis extreme).
template <typename F>
void for_each_boundary_node(const Grid& grid, F&& fn) {
  const int n0 = grid.nx[0];
  const int n1 = grid.d > 1 ? grid.nx[1] : 1;
  const int n2 = grid.d > 2 ? grid.nx[2] : 1;
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j)
      for (int l = 0; l < n2; ++l) {
        const bool edge = i == 0 || i == n0 - 1 || (grid.d > 1 && (j == 0 || j == n1 - 1)) ||
                          (grid.d > 2 && (l == 0 || l == n2 - 1));
        if (edge) fn(i, j, l);
      }
}

double linear_superposition(const Scenario& sc, const std::array<ConormalProfile, 3>& profiles,
                            const Vec& y) {
  double v = 0.0;
  for (int s = 0; s < 3; ++s) v += traveling_wave_value(sc.surfaces[s], profiles[s], y);
  return v;
}

/// Per-node sponge damping factors (1 outside the margin), plus zero Dirichlet
/// handled by the boundary visitor.
std::vector<double> sponge_factors(const Grid& grid, int sponge_cells, double dt, double c_max) {
  std::vector<double> fac(grid.size(), 1.0);
  if (sponge_cells < 1) return fac;
  const double l_sp = sponge_cells * grid.h;
  const double sigma0 = 6.0 * c_max / l_sp;  // standard absorbing-layer strength heuristic
  const int n0 = grid.nx[0];
  const int n1 = grid.d > 1 ? grid.nx[1] : 1;
  const int n2 = grid.d > 2 ? grid.nx[2] : 1;
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j)
      for (int l = 0; l < n2; ++l) {
        int depth = std::min(i, n0 - 1 - i);
        if (grid.d > 1) depth = std::min(depth, std::min(j, n1 - 1 - j));
        if (grid.d > 2) depth = std::min(depth, std::min(l, n2 - 1 - l));
        if (depth >= sponge_cells) continue;
        const double xi = 1.0 - static_cast<double>(depth) / sponge_cells;
        const double s = smoothstep_cinf(xi);
        fac[grid.index(i, j, l)] = std::exp(-dt * sigma0 * s * s);
      }
  return fac;
}

void check_finite(const std::vector<double>& u, double t) {
  for (double v : u)
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "run: non-finite field value at t = " << t;
      throw NumericError(os.str());
    }
}

}  // namespace

GridField run(const Scenario& sc, const std::array<ConormalProfile, 3>& profiles,
              const Nonlinearity& nl, double T_end, const SolveOptions& opt) {
  const Grid& grid = opt.grid;
  if (grid.size() == 0) throw ArgumentError("run: options carry an empty grid");
  if (!(T_end > opt.t0)) throw ArgumentError("run: T_end must exceed t0");
  if (!(opt.cfl > 0.0) || opt.cfl > kCflMax + 1e-12)
    throw ArgumentError("run: cfl must lie in (0, kCflMax]");
  if (opt.bc != "exact-linear" && opt.bc != "zero" && opt.bc != "sponge")
    throw ArgumentError("run: bc must be exact-linear, zero, or sponge");

  // Pre-pass for the wave speed so dt can be fixed before building the stepper.
  double c_max = 0.0;
  {
    Vec y = Vec::Zero(grid.d + 1);
    for (int i = 0; i < grid.nx[0]; ++i)
      for (int j = 0; j < std::max(grid.nx[1], 1); ++j)
        for (int l = 0; l < std::max(grid.nx[2], 1); ++l) {
          y.tail(grid.d) = grid.coords(i, j, l);
          const double a = sc.op.alpha(y);
          const Mat h = sc.op.metric(y);
          double lam = 0.0;
          if (grid.d == 2) {
            const double off = 0.5 * (h(0, 1) + h(1, 0));
            lam = 0.5 * (h(0, 0) + h(1, 1)) + std::hypot(0.5 * (h(0, 0) - h(1, 1)), off);
          } else {
            for (int a2 = 0; a2 < grid.d; ++a2) lam = std::max(lam, h(a2, a2));
          }
          c_max = std::max(c_max, std::sqrt(lam) / a);
        }
  }

  const double span = T_end - opt.t0;
  const long n_steps = std::max<long>(1, static_cast<long>(std::ceil(span / (opt.cfl * grid.h / c_max))));
  const double dt = span / n_steps;

  Stepper stepper(sc, grid, nl, dt, opt.threads);

  auto [u_prev, u_cur] = synthesize_initial_data(sc, profiles, grid, opt.t0, dt);

  // Map requested record times to step indices (recorded at the nearest step).
  std::vector<long> rec_steps;
  for (double tr : opt.record_times) {
    long m = std::lround((tr - opt.t0) / dt);
    rec_steps.push_back(std::clamp(m, 0L, n_steps));
  }
  std::sort(rec_steps.begin(), rec_steps.end());
  rec_steps.erase(std::unique(rec_steps.begin(), rec_steps.end()), rec_steps.end());

  GridField out;
  out.grid = grid;
  out.cfl = opt.cfl;
  out.dt = dt;
  out.bc = opt.bc;

  const std::vector<double> sponge =
      opt.bc == "sponge" ? sponge_factors(grid, opt.sponge_cells, dt, c_max)
                         : std::vector<double>();

  std::size_t next_rec = 0;
  auto record_if_due = [&](long m, const std::vector<double>& before,
                           const std::vector<double>& at, const std::vector<double>& after,
                           double t_at, double dt_pair) {
    if (next_rec >= rec_steps.size() || rec_steps[next_rec] != m) return;
    out.times.push_back(t_at);
    out.data.push_back(at);
    out.energy.push_back(discrete_energy(grid, before, after, dt_pair));
    ++next_rec;
  };

  // Level 0 snapshot (energy from the first two consecutive levels).
  record_if_due(0, u_prev, u_prev, u_cur, opt.t0, dt);

  // Levels 0 and 1 come from the initial data; compute levels 2 .. n_steps.
  std::vector<double> u_next(grid.size());
  Vec yb = Vec::Zero(grid.d + 1);
  for (long lev = 2; lev <= n_steps; ++lev) {
    const double t_cur = opt.t0 + (lev - 1) * dt;  // time of u_cur
    const double t_new = opt.t0 + lev * dt;
    stepper.step(u_prev, u_cur, u_next, t_cur);

    yb[0] = t_new;
    for_each_boundary_node(grid, [&](int i, int j, int l) {
      const std::size_t c = grid.index(i, j, l);
      if (opt.bc == "exact-linear") {
        yb.tail(grid.d) = grid.coords(i, j, l);
        u_next[c] = linear_superposition(sc, profiles, yb);
      } else {
        u_next[c] = 0.0;
      }
    });
    if (opt.bc == "sponge")
      for (std::size_t c = 0; c < u_next.size(); ++c) u_next[c] *= sponge[c];

    if (lev % kNanCheckStride == 0) check_finite(u_next, t_new);

    // Snapshots live at u_cur's time level; the energy pairs it with u_next.
    record_if_due(lev - 1, u_cur, u_cur, u_next, t_cur, dt);

    std::swap(u_prev, u_cur);
    std::swap(u_cur, u_next);
  }

  // Final level (energy from the last two consecutive levels).
  check_finite(u_cur, T_end);
  record_if_due(n_steps, u_prev, u_cur, u_cur, T_end, dt);

  return out;
}

double discrete_energy(const Grid& grid, const std::vector<double>& u_a,
                       const std::vector<double>& u_b, double dt) {
  // Staggered invariant of the unit-coefficient leapfrog scheme for two
  // CONSECUTIVE levels u_a = u^n, u_b = u^{n+1}:
  //   E = 1/2 ||(u_b - u_a)/dt||^2 + 1/2 sum_faces D u_a . D u_b,
  // which telescopes exactly (to round-off) under the interior update, unlike
  // a centered sample of the continuum energy, which wobbles at O(dt^2).
  if (u_a.size() != grid.size() || u_b.size() != grid.size())
    throw ArgumentError("discrete_energy: field size does not match the grid");
  if (!(dt > 0.0)) throw ArgumentError("discrete_energy: dt must be positive");
  const double inv_dt = 1.0 / dt;
  const double inv_h = 1.0 / grid.h;
  const int n0 = grid.nx[0];
  const int n1 = grid.d > 1 ? grid.nx[1] : 1;
  const int n2 = grid.d > 2 ? grid.nx[2] : 1;
  const std::size_t strides[3] = {static_cast<std::size_t>(n1) * n2,
                                  static_cast<std::size_t>(n2), 1};
  const std::size_t s_axis0 = grid.d == 1 ? 1 : strides[0];
  double acc = 0.0;
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j)
      for (int l = 0; l < n2; ++l) {
        const std::size_t c = grid.index(i, j, l);
        const double ut = (u_b[c] - u_a[c]) * inv_dt;
        acc += 0.5 * ut * ut;
        if (i + 1 < n0)
          acc += 0.5 * (u_a[c + s_axis0] - u_a[c]) * (u_b[c + s_axis0] - u_b[c]) * inv_h * inv_h;
        if (grid.d > 1 && j + 1 < n1)
          acc += 0.5 * (u_a[c + strides[1]] - u_a[c]) * (u_b[c + strides[1]] - u_b[c]) * inv_h *
                 inv_h;
        if (grid.d > 2 && l + 1 < n2)
          acc += 0.5 * (u_a[c + 1] - u_a[c]) * (u_b[c + 1] - u_b[c]) * inv_h * inv_h;
      }
  return acc * std::pow(grid.h, grid.d);
}

}  // namespace triplewave
