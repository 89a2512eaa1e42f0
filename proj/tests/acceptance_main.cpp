// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit status
// when any criterion fails.  Heavier end-to-end configurations than the unit
// suite; every expected number is either a closed form evaluated here or an
// independent oracle from tests/oracles.
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "triplewave/anisonorm.hpp"
#include "triplewave/common.hpp"
#include "triplewave/detector.hpp"
#include "triplewave/geometry.hpp"
#include "triplewave/scenarios.hpp"
#include "triplewave/solver.hpp"
#include "triplewave/symbolcalc.hpp"

namespace tw = triplewave;

namespace {

tw::Vec vec(std::initializer_list<double> v) {
  tw::Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// C-infinity step: 0 for x <= 0, 1 for x >= 1.
double planck01(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 1.0 / (1.0 + std::exp(1.0 / x - 1.0 / (1.0 - x)));
}

// C-infinity bump supported on rho < radius with value 1 at rho = 0.
double cinf_bump(double rho, double radius) {
  const double q = (rho / radius) * (rho / radius);
  if (q >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - q));
}

// ---------------------------------------------------------------------------
// Criterion 1: flow-out meshes of the three closed-form configurations lie on
// their closed-form fronts: scaled residual |G|/|grad G| <= 1e-8 over ok,
// non-caustic nodes with s > 0 (the causal branch of each null fiber).

bool criterion1(std::string& detail) {
  struct Case {
    tw::ScenarioId id;
    double s_max;
  };
  const Case cases[] = {{tw::ScenarioId::planes_cylinder, 2.0},
                        {tw::ScenarioId::planes_cone, 2.0},
                        {tw::ScenarioId::spheres, 2.5}};
  bool pass = true;
  std::string parts;
  for (const Case& c : cases) {
    const tw::Scenario sc = tw::make_scenario(c.id);
    const auto gamma = sc.sample_gamma(9);
    std::vector<std::vector<tw::CovectorPoint>> fibers;
    const int res = 16;
    for (const auto& q : gamma) {
      const auto fib = tw::conormal_null_fiber(sc.op, q, sc.fiber_normals(q), res);
      // forward (tau > 0) circle comes first: this is the causal branch on
      // which the closed forms are stated.
      fibers.emplace_back(fib.points.begin(), fib.points.begin() + res);
    }
    const auto mesh = tw::flow_out(sc.op, gamma, fibers, c.s_max, 21);
    std::vector<tw::Vec> pts;
    std::size_t n_flagged = 0, n_hole = 0;
    for (int ig = 0; ig < mesh.n_gamma; ++ig)
      for (int ifib = 0; ifib < mesh.n_fiber; ++ifib)
        for (int is = 1; is < mesh.n_s; ++is) {
          const std::size_t node = mesh.index(ig, ifib, is);
          if (!mesh.node_ok[node]) {
            ++n_hole;
            continue;
          }
          if (mesh.caustic_flag[node]) {
            ++n_flagged;
            continue;
          }
          pts.push_back(mesh.points[node]);
        }
    const double resid = tw::closed_form_distance(sc, pts);
    const bool ok = resid <= 1e-8 && pts.size() >= 1000 && n_hole == 0;
    pass = pass && ok;
    parts += fmt("%s%s=%.2e(n=%zu)", parts.empty() ? "" : " ", sc.name.c_str(), resid,
                 pts.size());
  }
  detail = parts + " tol=1e-8";
  return pass;
}

// ---------------------------------------------------------------------------
// Criterion 2: apparent radial speed of the sphere-configuration front on the
// slice x3 = 1 (a = b = 1): |dR/dt| >= 1 at every probed time and
// dR/dt(t = 2) = 2/sqrt(3) to 1e-3.

bool criterion2(std::string& detail) {
  const tw::Scenario sc = tw::make_scenario(tw::ScenarioId::spheres);
  // One Gamma sample per target crossing time: the rays from gamma(u) cross
  // x3 = 1 at t = sqrt(u^2 + 2) / u, so u = sqrt(2 / (t^2 - 1)) gives a
  // crossing ladder with 0.01 spacing (the slope fit needs several distinct
  // crossing times inside its window).
  std::vector<tw::Vec> gamma;
  std::vector<std::vector<tw::CovectorPoint>> fibers;
  for (double t = 1.40; t <= 3.2005; t += 0.01) {
    const double u = std::sqrt(2.0 / (t * t - 1.0));
    const tw::Vec q = sc.gamma(u);
    gamma.push_back(q);
    fibers.push_back(tw::conormal_null_fiber(sc.op, q, sc.fiber_normals(q), 8).points);
  }
  const auto mesh = tw::flow_out(sc.op, gamma, fibers, 2.0, 25);
  const std::vector<double> t_eval = {1.5, 1.6, 1.9, 2.0, 2.1, 2.4, 2.7, 3.0};
  const auto samples = tw::apparent_front_speed(mesh, 1.0, vec({1.0, 1.0}), t_eval);

  bool pass = samples.size() == t_eval.size();
  double worst_speed = 1e300, err_at_2 = 1e300;
  for (const auto& s : samples) {
    worst_speed = std::min(worst_speed, std::abs(s.dRdt));
    if (std::abs(s.t - 2.0) < 1e-12) err_at_2 = std::abs(s.dRdt - 2.0 / std::sqrt(3.0));
  }
  pass = pass && worst_speed >= 1.0 - 1e-3 && err_at_2 <= 1e-3;
  detail = fmt("|dR/dt(2)-2/sqrt3|=%.2e (tol 1e-3), min|dR/dt|=%.6f, %zu/%zu times", err_at_2,
               worst_speed, samples.size(), t_eval.size());
  return pass;
}

// ---------------------------------------------------------------------------
// Criterion 3: order bookkeeping over m in [-12, -1.01] step 0.01 plus the
// pinned examples.

bool criterion3(std::string& detail) {
  bool pass = true;
  int n_checked = 0;
  for (int i = 0; i <= 1099; ++i) {
    const double m = -12.0 + 0.01 * i;
    const int k = tw::k_of_m(m);
    bool ok = k >= 0 && k >= -m - 2.0 - 1e-9 && k < -m - 1.0 + 1e-9;
    // product order in n = 4 with N = 3 factors.
    const double po = tw::product_order(m, 3, 4);
    ok = ok && std::abs(po - (m - 1.0 + 0.5 - 2.0 * k)) <= 1e-12;
    const auto t3 = tw::triple_output_order(m, 3);
    ok = ok && std::abs(t3.output_order - (3.0 * m - 0.75)) <= 1e-12 &&
         std::abs(t3.incoming_order - (m - 0.25)) <= 1e-12 && t3.hypothesis_ok == (m < -5.0);
    const auto t4 = tw::triple_output_order(m, 4);
    ok = ok && std::abs(t4.output_order - (3.0 * m - 1.0)) <= 1e-12 &&
         std::abs(t4.incoming_order - (m - 0.5)) <= 1e-12 && t4.hypothesis_ok == (m < -5.5);
    pass = pass && ok;
    ++n_checked;
  }
  // Pinned examples and domain edges.
  const auto a = tw::triple_output_order(-6.0, 3);
  const auto b = tw::triple_output_order(-6.0, 4);
  pass = pass && a.output_order == -18.75 && a.incoming_order == -6.25;
  pass = pass && b.output_order == -19.0 && b.incoming_order == -6.5;
  pass = pass && tw::k_of_m(-1.01) == 0;
  bool threw = false;
  try {
    (void)tw::k_of_m(-1.0);
  } catch (const tw::DomainError&) {
    threw = true;
  }
  pass = pass && threw;
  detail = fmt("%d grid points, pinned (-6,n=3)->(-18.75,-6.25), (-6,n=4)->(-19,-6.5)",
               n_checked);
  return pass;
}

// ---------------------------------------------------------------------------
// Criterion 4: transport along tubes. Plane tube constant to 1e-10; point
// tubes match closed-form geometric spreading to 1e-6 (2-D fan ~ 1/sqrt(s),
// 3-D fan ~ 1/s); damped model matches the independent RK4 reference to 1e-8.

tw::Ray trimmed(const tw::Ray& r) {  // drop the s = 0 sample (J vanishes there)
  tw::Ray out;
  out.s.assign(r.s.begin() + 1, r.s.end());
  out.pts.assign(r.pts.begin() + 1, r.pts.end());
  return out;
}

bool criterion4(std::string& detail) {
  bool pass = true;

  // (a) plane tube: J == 1 along a Minkowski ray.
  {
    const auto op = tw::HyperbolicOperator::minkowski(4);
    const double r2 = 1.0 / std::sqrt(2.0);
    const auto ray =
        tw::trace_ray(op, {vec({0, 0, 0, 0}), vec({r2, -r2, 0, 0})}, 1.0);
    const auto sym = tw::transport_amplitude(op, ray, 1.0, [](double) { return 1.0; });
    double worst = 0.0;
    for (const auto& a : sym.a) worst = std::max(worst, std::abs(std::abs(a) - 1.0));
    pass = pass && worst <= 1e-10;
    detail += fmt("plane=%.1e", worst);
  }

  // (b) point-source fans: exact straight-ray spreading J ~ s^(d-1).
  {
    tw::StepControl ctrl;
    ctrl.record_accepted = false;
    for (double s = 0.25; s <= 2.0001; s += 0.05) ctrl.record_s.push_back(s);

    auto fan_ray = [&](const tw::HyperbolicOperator& op, double th, double ph) {
      const int d = op.dim() - 1;
      tw::Vec eta(d + 1);
      eta[0] = 1.0;
      if (d == 2) {
        eta[1] = -std::cos(th);
        eta[2] = -std::sin(th);
      } else {
        eta[1] = -std::cos(th) * std::cos(ph);
        eta[2] = -std::sin(th) * std::cos(ph);
        eta[3] = -std::sin(ph);
      }
      eta /= std::sqrt(2.0);
      tw::Vec y = tw::Vec::Zero(d + 1);
      return tw::trace_ray(op, {y, eta}, 2.0, ctrl);
    };

    // 2-D spatial fan: one angular parameter, J ~ s, |a| ~ sqrt(s0/s).
    {
      const auto op = tw::HyperbolicOperator::minkowski(3);
      const auto center = fan_ray(op, 0.0, 0.0);
      const auto nb = fan_ray(op, 1e-4, 0.0);
      const auto J = tw::tube_jacobian_from_rays(center, {nb}, {1e-4});
      const auto sym = tw::transport_amplitude(op, trimmed(center), 1.0, J);
      double worst = 0.0;
      for (std::size_t i = 0; i < sym.s.size(); ++i)
        worst = std::max(worst,
                         std::abs(std::abs(sym.a[i]) - std::sqrt(0.25 / sym.s[i])));
      pass = pass && worst <= 1e-6;
      detail += fmt(" fan2d=%.1e", worst);
    }
    // 3-D spatial fan: two angular parameters, J ~ s^2, |a| ~ s0/s.
    {
      const auto op = tw::HyperbolicOperator::minkowski(4);
      const auto center = fan_ray(op, 0.0, 0.0);
      const auto nb1 = fan_ray(op, 1e-4, 0.0);
      const auto nb2 = fan_ray(op, 0.0, 1e-4);
      const auto J = tw::tube_jacobian_from_rays(center, {nb1, nb2}, {1e-4, 1e-4});
      const auto sym = tw::transport_amplitude(op, trimmed(center), 1.0, J);
      double worst = 0.0;
      for (std::size_t i = 0; i < sym.s.size(); ++i)
        worst = std::max(worst, std::abs(std::abs(sym.a[i]) - 0.25 / sym.s[i]));
      pass = pass && worst <= 1e-6;
      detail += fmt(" fan3d=%.1e", worst);
    }
  }

  // (c) damped model against the closed form and the independent integrator.
  {
    const double beta = 0.35, r2 = 1.0 / std::sqrt(2.0);
    const auto op = tw::HyperbolicOperator::damped_minkowski(2, beta);
    const auto ray = tw::trace_ray(op, {vec({0, 0}), vec({r2, -r2})}, 2.0);
    const auto sym = tw::transport_amplitude(op, ray, 1.0, [](double) { return 1.0; });
    double worst_cf = 0.0;
    for (std::size_t i = 0; i < sym.s.size(); ++i)
      worst_cf = std::max(worst_cf,
                          std::abs(std::abs(sym.a[i]) - std::exp(-beta * r2 * sym.s[i])));
    std::vector<tw::Complex> ct(sym.c.size());
    for (std::size_t i = 0; i < sym.c.size(); ++i) ct[i] = tw::Complex(0, 1) * sym.c[i];
    const std::vector<double> ones(sym.s.size(), 1.0);
    const auto ref = tw::oracle::transport_reference(sym.s, ct, ones, 1.0, 64);
    double worst_or = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      worst_or = std::max(worst_or, std::abs(sym.a[i] - ref[i]));
    pass = pass && worst_cf <= 1e-8 && worst_or <= 1e-8;
    detail += fmt(" damped: closed=%.1e oracle=%.1e", worst_cf, worst_or);
  }
  return pass;
}

// ---------------------------------------------------------------------------
// Shared 512^2 three-run experiment for criteria 5 and 6.

struct Fig12Runs {
  tw::Scenario sc = tw::make_scenario(tw::ScenarioId::fig1_2d);
  tw::Grid grid;
  double h = 0.0;
  double t_detect = 1.5;
  std::array<tw::ConormalProfile, 3> profiles;
  tw::GridField cubic, quad, lin;
};

const Fig12Runs& fig12() {
  static const Fig12Runs runs = [] {
    Fig12Runs f;
    f.grid = tw::Grid::square(2, 512, 3.5);
    f.h = f.grid.h;
    tw::ConormalProfile p;
    p.kind = tw::ConormalProfile::Kind::xplus;
    p.k = 4.0;
    p.eps = 5.0 * f.h;
    p.width = 0.7;
    p.amplitude = 4.0;
    f.profiles = {p, p, p};
    const auto Y = tw::make_cutoff(-1.0, 0.5, 1.2, 1.8);
    tw::SolveOptions opt;
    opt.grid = f.grid;
    opt.t0 = -2.0;
    opt.cfl = 0.4;
    opt.record_times = {f.t_detect};
    opt.bc = "exact-linear";
    std::cerr << "[fig12] cubic run...\n";
    f.cubic = tw::run(f.sc, f.profiles, tw::Nonlinearity::cubic(Y), f.t_detect, opt);
    std::cerr << "[fig12] quadratic run...\n";
    f.quad = tw::run(f.sc, f.profiles, tw::Nonlinearity::quadratic(Y), f.t_detect, opt);
    std::cerr << "[fig12] linear run...\n";
    f.lin = tw::run(f.sc, f.profiles, tw::Nonlinearity::none(), f.t_detect, opt);
    return f;
  }();
  return runs;
}

// Criterion 5: the matched-run discriminator fires on the cubic run (ridge on
// the predicted front, mean distance <= 2h, coverage >= 60%, band energy >=
// 10x both controls) and stays off when a control run is used as candidate.

bool criterion5(std::string& detail) {
  const auto& F = fig12();
  tw::DiscriminatorOptions opt;  // defaults pin the thresholds above
  const auto v = tw::cubic_discriminator(F.cubic, F.quad, F.lin, F.sc, F.t_detect, opt);
  const auto vq = tw::cubic_discriminator(F.quad, F.quad, F.lin, F.sc, F.t_detect, opt);
  const auto vl = tw::cubic_discriminator(F.lin, F.quad, F.lin, F.sc, F.t_detect, opt);
  std::cerr << fmt("[crit5] E(cubic)=%.3e E(quad)=%.3e E(lin)=%.3e rq=%.1f rl=%.1f "
                   "mean=%.2fh max=%.2fh cover=%.2f pts=%d\n",
                   v.energy_cubic, v.energy_quadratic, v.energy_linear, v.ratio_quadratic,
                   v.ratio_linear, v.agreement.mean_dist / F.h, v.agreement.max_dist / F.h,
                   v.agreement.coverage, v.agreement.n_points);
  const bool pass = v.on && v.ratio_quadratic >= 10.0 && v.ratio_linear >= 10.0 &&
                    v.agreement.mean_dist <= 2.0 * F.h && v.agreement.coverage >= 0.6 &&
                    !vq.on && !vl.on;
  detail = fmt("on=%d ratios q=%.1f l=%.1f mean=%.2fh cover=%.0f%% ctrl(on)=%d,%d", v.on,
               v.ratio_quadratic, v.ratio_linear, v.agreement.mean_dist / F.h,
               100.0 * v.agreement.coverage, vq.on, vl.on);
  return pass;
}

// Criterion 6: slope gap between an incoming transect and a transect through
// the new front is negative and within +-0.75 of 2m - 1/2 with m the measured
// incoming slope (effective-order convention).

bool criterion6(std::string& detail) {
  const auto& F = fig12();
  const int N = F.grid.nx[0];
  const auto& uc = F.cubic.at_time(F.t_detect);
  const auto& ul = F.lin.at_time(F.t_detect);

  auto column = [&](int i, const std::vector<double>& u) {
    std::vector<double> col(N);
    for (int j = 0; j < N; ++j) col[j] = u[F.grid.index(i, j)];
    return col;
  };
  auto window = [&](std::vector<double>& col, double flat, double cut) {
    for (int j = 0; j < N; ++j) {
      const double x2 = std::abs(F.grid.lo[1] + j * F.h);
      col[j] *= 1.0 - planck01((x2 - flat) / (cut - flat));
    }
  };

  // Incoming transect: a column left of the front circle; it meets the kinks
  // of two incoming waves and nothing else (the field vanishes well inside
  // the window's flat region).
  const int i_in = static_cast<int>(std::lround((-1.75 - F.grid.lo[0]) / F.h));
  auto tin = column(i_in, uc);
  window(tin, 2.9, 3.3);

  // Front transect: a column through the circle, away from all tangency
  // points. The linear run is subtracted (both runs share the same incoming
  // waves; the difference keeps exactly the nonlinearly generated field and
  // the front singularity riding on it), and the window removes the incoming
  // kinks the column still meets at larger |x2|.
  const int i_out = static_cast<int>(std::lround((0.9 - F.grid.lo[0]) / F.h));
  std::vector<double> tout(N);
  for (int j = 0; j < N; ++j) {
    const std::size_t idx = F.grid.index(i_out, j);
    tout[j] = uc[idx] - ul[idx];
  }
  window(tout, 1.55, 2.10);

  const double lo = 9.0, hi = 24.0;
  const auto s_in = tw::spectral_slope(tin, F.h, lo, hi);
  const auto s_out = tw::spectral_slope(tout, F.h, lo, hi);
  const double gap = s_out.slope - s_in.slope;
  const double pred = 2.0 * s_in.slope - 0.5;
  std::cerr << fmt("[crit6] slope_in=%.3f (ok=%d bins=%d) slope_out=%.3f (ok=%d bins=%d %s) "
                   "gap=%.3f pred=%.3f\n",
                   s_in.slope, s_in.ok, s_in.n_bins, s_out.slope, s_out.ok, s_out.n_bins,
                   s_out.reject_reason.c_str(), gap, pred);
  const double oracle_in = tw::oracle::direct_dft_slope(tin, F.h, lo, hi);
  std::cerr << fmt("[crit6] oracle incoming slope=%.3f\n", oracle_in);
  const bool pass = s_in.ok && s_out.ok && gap < 0.0 && std::abs(gap - pred) <= 0.75;
  detail = fmt("in=%.2f out=%.2f gap=%.2f pred(2m-1/2)=%.2f (tol 0.75)", s_in.slope,
               s_out.slope, gap, pred);
  return pass;
}

// ---------------------------------------------------------------------------
// Criterion 7: norm-growth threshold of the m = -6 model kink matches
// kappa + r < -m - 1/2 = 5.5 within 0.5 under 3 grid refinements, and the
// kernel convergence flag matches the sign of n - 2 sum k_j on a 20-case grid.

bool criterion7(std::string& detail) {
  bool pass = true;

  // (a) refinement scan of the Gaussian-windowed kink x_+^{4.5} e^{-x^2}
  // (Fourier tail eta^{-5.5}).  The window keeps the smooth bulk's spectrum
  // super-polynomially small so the algebraic kink tail is what the norms
  // measure; grids 256..2048 on [-8, 8) give three refinements below the
  // round-off floor of the tail.
  const double len = 16.0;
  auto kink_ratio = [&](double q) {
    double prev = 0.0, r = 0.0;
    for (int n : {256, 512, 1024, 2048}) {
      const double h = len / n;
      std::vector<double> f(n);
      for (int i = 0; i < n; ++i) {
        const double x = -len / 2 + i * h;
        f[i] = (x > 0.0 ? std::pow(x, 4.5) : 0.0) * std::exp(-x * x);
      }
      tw::AnisoIndex idx;
      idx.s = q;
      const double cur = tw::aniso_norm(f, {n}, h, idx, 0.0);
      if (prev > 0.0) r = cur / prev;
      prev = cur;
    }
    return r;
  };
  double q_hat = -1.0;
  for (double q = 4.8; q <= 6.4 + 1e-9; q += 0.1) {
    if (kink_ratio(q) >= 1.2) {
      q_hat = q;
      break;
    }
  }
  const double q_pred = -(-6.0) - 0.5;
  const bool low_flat = kink_ratio(4.5) < 1.05 && kink_ratio(5.0) < 1.05;
  const bool high_grow = kink_ratio(6.0) >= 1.2 && kink_ratio(6.5) >= 1.2;
  pass = pass && low_flat && high_grow && q_hat > 0.0 && std::abs(q_hat - q_pred) <= 0.5;
  std::cerr << fmt("[crit7] growth onset q=%.2f (pred %.2f); r(4.5)=%.3f r(5)=%.3f "
                   "r(6)=%.3f r(6.5)=%.3f\n",
                   q_hat, q_pred, kink_ratio(4.5), kink_ratio(5.0), kink_ratio(6.0),
                   kink_ratio(6.5));

  // (b) kernel flag vs sign of n - 2 sum k_j on 20 cases (sigma = 0; the k
  // values are balanced so no proper-subset condition binds a convergent
  // case, making the full-space count the only active constraint).
  struct KCase {
    int n;
    double k1, k2, k3;
  };
  const KCase cases[] = {
      {1, 0.8, 0, 0},    {1, 0.3, 0, 0},     {1, 1.2, 0, 0},    {1, 0.35, 0, 0},
      {1, 0.65, 0, 0},   {2, 0.7, 0.7, 0},   {2, 0.9, 0.6, 0},  {2, 0.4, 0.4, 0},
      {2, 0.45, 0.45, 0},{2, 0.8, 0.9, 0},   {3, 0.7, 0.7, 0.7},{3, 0.6, 0.6, 0.6},
      {3, 0.4, 0.4, 0.4},{3, 0.45, 0.45, 0.4},{3, 0.9, 0.8, 0.7},{4, 0.8, 0.8, 0.8},
      {4, 1.0, 0.7, 0.6},{4, 0.6, 0.6, 0.6}, {4, 0.7, 0.6, 0.55},{4, 0.9, 0.9, 0.9}};
  int n_match = 0;
  for (const auto& c : cases) {
    tw::AnisoIndex idx;
    idx.s = tw::kDefaultDelta;  // sigma = s - delta = 0
    idx.k1 = c.k1;
    idx.k2 = c.k2;
    idx.k3 = c.k3;
    const auto ker = tw::kernel_integral(idx, tw::kDefaultDelta, c.n);
    double ksum = 0.0;
    for (int j = 0; j < std::min(c.n, 3); ++j) ksum += idx.k(j);
    const bool expect = c.n - 2.0 * ksum < 0.0;
    if (ker.converges == expect) ++n_match;
  }
  pass = pass && n_match == 20;
  detail = fmt("growth onset q=%.2f vs %.2f (tol 0.5), kernel flags %d/20", q_hat, q_pred,
               n_match);
  return pass;
}

// ---------------------------------------------------------------------------
// Criterion 8: solver validation. L2 self-convergence rate 2.0 +- 0.2 on
// (h, h/2, h/4) against the exact traveling wave; energy drift <= 0.1% over
// T = 2 at cfl 0.4 with f = 0; domain of dependence; mirror symmetry.

bool criterion8(std::string& detail) {
  const tw::Scenario sc = tw::make_scenario(tw::ScenarioId::fig1_2d);
  bool pass = true;

  // (a) convergence rate on a single exact traveling wave.
  {
    std::vector<double> errs;
    for (int n : {129, 257, 513}) {
      const tw::Grid grid = tw::Grid::square(2, n, 3.5);
      tw::ConormalProfile p;
      p.kind = tw::ConormalProfile::Kind::xplus;
      p.k = 4.0;
      p.eps = 0.25;
      p.width = 0.5;
      std::array<tw::ConormalProfile, 3> profs = {p, p, p};
      profs[1].amplitude = 0.0;
      profs[2].amplitude = 0.0;
      tw::SolveOptions opt;
      opt.grid = grid;
      opt.t0 = -2.0;
      opt.cfl = 0.4;
      opt.record_times = {-1.0};
      const auto gf = tw::run(sc, profs, tw::Nonlinearity::none(), -1.0, opt);
      const auto& u = gf.at_time(-1.0);
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const tw::Vec x = grid.coords(i, j);
          tw::Vec y(3);
          y << -1.0, x[0], x[1];
          const double e = tw::traveling_wave_value(sc.surfaces[0], profs[0], y);
          const double d = u[grid.index(i, j)] - e;
          acc += d * d;
        }
      errs.push_back(grid.h * std::sqrt(acc));
    }
    const double r1 = std::log2(errs[0] / errs[1]);
    const double r2 = std::log2(errs[1] / errs[2]);
    std::cerr << fmt("[crit8] L2 errs %.3e %.3e %.3e rates %.3f %.3f\n", errs[0], errs[1],
                     errs[2], r1, r2);
    pass = pass && r1 >= 1.8 && r1 <= 2.2 && r2 >= 1.8 && r2 <= 2.2;
    detail += fmt("rates=%.2f,%.2f", r1, r2);
  }

  // (b) energy conservation of a compact pulse (never reaches the boundary).
  {
    const tw::Grid grid = tw::Grid::square(2, 257, 3.5);
    const double dt = 0.4 * grid.h;
    const int n_steps = static_cast<int>(std::lround(2.0 / dt));
    tw::Stepper st(sc, grid, tw::Nonlinearity::none(), dt);
    std::vector<double> prev(grid.size(), 0.0), cur(grid.size(), 0.0),
        next(grid.size(), 0.0);
    const int n = grid.nx[0];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const tw::Vec x = grid.coords(i, j);
        prev[grid.index(i, j)] = cinf_bump(x.norm(), 0.5);
      }
    cur = prev;
    double e0 = -1.0, drift = 0.0;
    for (int k = 0; k < n_steps; ++k) {
      st.step(prev, cur, next, k * dt);
      if (k >= 25 && k % 25 == 0) {
        const double e = tw::discrete_energy(grid, cur, next, dt);
        if (e0 < 0)
          e0 = e;
        else
          drift = std::max(drift, std::abs(e - e0) / e0);
      }
      std::swap(prev, cur);
      std::swap(cur, next);
    }
    std::cerr << fmt("[crit8] energy drift over T=2: %.2e\n", drift);
    pass = pass && e0 > 0 && drift <= 1e-3;
    detail += fmt(" drift=%.1e", drift);
  }

  // (c) domain of dependence: an extra data bump supported outside |x| >= r
  // leaves the ball of radius r - c_max T unchanged to round-off (and the
  // strictly causality-protected cells bitwise identical).
  {
    const tw::Grid grid = tw::Grid::square(2, 257, 3.5);
    const double dt = 0.4 * grid.h;
    const int n_steps = 37;
    const double T = n_steps * dt;
    const double r = 2.65;  // perturbation: bump at (2.9, 0), radius 0.25
    tw::Stepper st(sc, grid, tw::Nonlinearity::none(), dt);
    const int n = grid.nx[0];
    auto march = [&](bool perturbed) {
      std::vector<double> prev(grid.size(), 0.0), cur(grid.size(), 0.0),
          next(grid.size(), 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const tw::Vec x = grid.coords(i, j);
          double v = cinf_bump(x.norm(), 0.3);
          if (perturbed) v += cinf_bump(std::hypot(x[0] - 2.9, x[1]), 0.25);
          prev[grid.index(i, j)] = v;
        }
      cur = prev;
      for (int k = 0; k < n_steps; ++k) {
        st.step(prev, cur, next, k * dt);
        std::swap(prev, cur);
        std::swap(cur, next);
      }
      return cur;  // solution at T after the swaps
    };
    const auto a = march(false);
    const auto b = march(true);
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    const double ball = r - T;  // c_max = 1
    double worst_ball = 0.0;
    bool bitwise = true;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const tw::Vec x = grid.coords(i, j);
        const std::size_t idx = grid.index(i, j);
        const double d = std::abs(a[idx] - b[idx]);
        if (x.norm() <= ball - 2.0 * grid.h) worst_ball = std::max(worst_ball, d);
        // Discrete influence moves one cell per step; cells farther than that
        // from the perturbation must match bitwise.
        if (std::hypot(x[0] - 2.9, x[1]) > 0.25 + (n_steps + 2) * grid.h && d != 0.0)
          bitwise = false;
      }
    std::cerr << fmt("[crit8] dod: max diff in ball r-T = %.2e (scale %.2e), bitwise=%d\n",
                     worst_ball, scale, bitwise);
    pass = pass && worst_ball <= 1e-12 * std::max(scale, 1.0) && bitwise;
    detail += fmt(" dod=%.1e", worst_ball);
  }

  // (d) mirror symmetry of the full nonlinear run under x2 -> -x2.
  {
    const tw::Grid grid = tw::Grid::square(2, 257, 3.5);
    tw::ConormalProfile p;
    p.kind = tw::ConormalProfile::Kind::xplus;
    p.k = 4.0;
    p.eps = 0.15;
    p.width = 0.5;
    std::array<tw::ConormalProfile, 3> profs = {p, p, p};
    tw::SolveOptions opt;
    opt.grid = grid;
    opt.t0 = -2.0;
    opt.cfl = 0.4;
    opt.record_times = {1.0};
    const auto gf = tw::run(sc, profs, tw::Nonlinearity::cubic(tw::make_cutoff(-1, 0.5, 1.2, 1.8)),
                            1.0, opt);
    const auto& u = gf.at_time(1.0);
    const int n = grid.nx[0];
    double scale = 0.0, worst = 0.0;
    for (double v : u) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        worst = std::max(worst,
                         std::abs(u[grid.index(i, j)] - u[grid.index(i, n - 1 - j)]));
    std::cerr << fmt("[crit8] mirror asymmetry %.2e (scale %.2e)\n", worst, scale);
    pass = pass && worst <= 1e-12 * std::max(scale, 1.0);
    detail += fmt(" mirror=%.1e", worst / std::max(scale, 1e-300));
  }
  return pass;
}

// ---------------------------------------------------------------------------
// Criterion 9: caustic scan is empty for the Minkowski cone away from the
// vertex and nonempty for the lens medium (cross-checked against the
// independent fan-fold oracle).

bool criterion9(std::string& detail) {
  bool pass = true;

  // Minkowski cone in 2 + 1: flow-out of the point locus.
  {
    const tw::Scenario sc = tw::make_scenario(tw::ScenarioId::fig1_2d);
    const auto gamma = sc.sample_gamma(1);
    const auto fib = tw::conormal_null_fiber(sc.op, gamma[0], sc.fiber_normals(gamma[0]), 32);
    const auto mesh = tw::flow_out(sc.op, gamma, {fib.points}, 2.5, 41);
    const auto rep = tw::caustic_scan(mesh);
    pass = pass && rep.n_flagged == 0;
    detail += fmt("cone flags=%zu", rep.n_flagged);
  }

  // Lens: fan from the point source folds inside the slow region.
  {
    const tw::Scenario sc = tw::make_scenario(tw::ScenarioId::lens);
    const tw::Vec src = sc.params.lens_source;
    std::vector<tw::CovectorPoint> fan;
    for (int i = 0; i < 33; ++i) {
      const double th = -0.35 + 0.70 * i / 32.0;
      tw::Vec xi = vec({-std::cos(th), -std::sin(th)});
      const tw::Mat hm = sc.op.metric(src);
      const double tau = std::sqrt(xi.dot(hm * xi)) / sc.op.alpha(src);
      tw::Vec eta(3);
      eta << tau, xi[0], xi[1];
      fan.push_back({src, eta});
    }
    // The aberration fold of this lens sits near s ~ 9; scan well past it so
    // the fold lies in the interior of the parameter mesh.
    const auto mesh = tw::flow_out(sc.op, {src}, {fan}, 14.0, 95);
    const auto rep = tw::caustic_scan(mesh);
    double s_flag = 1e300;
    for (int ifib = 0; ifib < mesh.n_fiber; ++ifib)
      for (int is = 0; is < mesh.n_s; ++is)
        if (mesh.caustic_flag[mesh.index(0, ifib, is)])
          s_flag = std::min(s_flag, mesh.s_values[is]);
    const auto fold =
        tw::oracle::first_fan_fold(sc.op, src, 0.0, 0.35, 161, 14.0, 4500);
    pass = pass && rep.n_flagged > 0 && !rep.components.empty() && fold.found &&
           std::abs(s_flag - fold.s_first) <= 0.3;
    if (rep.n_flagged > 0)
      detail += fmt(", lens flags=%zu comps=%zu s=%.2f oracle=%.2f", rep.n_flagged,
                    rep.components.size(), s_flag, fold.s_first);
    else
      detail += fmt(", lens flags=0 comps=%zu oracle=%.2f", rep.components.size(),
                    fold.found ? fold.s_first : -1.0);
  }
  return pass;
}

}  // namespace

int main() {
  struct Crit {
    int id;
    const char* title;
    std::function<bool(std::string&)> fn;
  };
  const std::vector<Crit> crits = {
      {1, "closed-form flow-out fronts", criterion1},
      {2, "apparent superluminal front speed", criterion2},
      {3, "order bookkeeping scan", criterion3},
      {4, "transport along ray tubes", criterion4},
      {5, "cubic discriminator on/off", criterion5},
      {6, "spectral slope gap at the new front", criterion6},
      {7, "norm growth threshold and kernel flags", criterion7},
      {8, "solver convergence, energy, causality, symmetry", criterion8},
      {9, "caustic scan: cone clean, lens folds", criterion9},
  };
  int failed = 0;
  for (const auto& c : crits) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    std::printf("%s  criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", c.id, c.title,
                detail.empty() ? "" : " | ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failed;
  }
  std::printf("%d/9 criteria passed\n", static_cast<int>(crits.size()) - failed);
  return failed == 0 ? 0 : 1;
}
