#include "triplewave/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "triplewave/fourier.hpp"

namespace triplewave {

namespace {

constexpr int kEdgeMarginCells = 8;     // FFT periodization ringing margin
constexpr double kCoverRadiusCells = 3.0;
constexpr double kFrontCellBand = 0.75;  // |distance| <= this * h marks a front cell

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const auto lower = std::max_element(v.begin(), v.begin() + mid);
    m = 0.5 * (m + *lower);
  }
  return m;
}

/// Band gain with C-infinity skirts of width = quarter of the band. Infinitely
/// smooth edges keep the spatial kernel's sidelobes decaying faster than any
/// power of the distance; raised-cosine (C^1) skirts ring like 1/dist^2 and a
/// strong ridge then registers spurious lobe maxima far from itself.
double band_gain(double eta, double lo, double hi) {
  const double w = 0.25 * (hi - lo);
  return smoothstep_cinf((eta - (lo - w)) / w) * smoothstep_cinf((hi + w - eta) / w);
}

/// Radial band-pass of a 2-D field (row-major nx * ny, spacing h).
std::vector<double> band_pass_2d(const std::vector<double>& field, int nx, int ny, double h,
                                 double band_lo, double band_hi) {
  if (!(band_hi > band_lo) || !(band_lo >= 0.0))
    throw ArgumentError("band-pass: empty or invalid band");
  if (static_cast<std::size_t>(nx) * ny != field.size())
    throw ArgumentError("band-pass: field size does not match nx * ny");
  std::vector<Complex> spec = dft_forward(field, {nx, ny});
  for (int i = 0; i < nx; ++i) {
    const double ex = dft_frequency(i, nx, h);
    for (int j = 0; j < ny; ++j) {
      const double ey = dft_frequency(j, ny, h);
      spec[static_cast<std::size_t>(i) * ny + j] *= band_gain(std::hypot(ex, ey), band_lo, band_hi);
    }
  }
  return dft_inverse_real(spec, {nx, ny});
}

/// First-order distance of the spatial point x to {Q(t, .) = 0} in the slice.
double closed_form_slice_distance(const Scenario& sc, double t, const Vec& x) {
  Vec y(x.size() + 1);
  y[0] = t;
  y.tail(x.size()) = x;
  const double q = sc.closed_form_Q(y);
  const Vec g = sc.closed_form_Q_grad(y);
  const double gs = g.tail(x.size()).norm();
  return std::abs(q) / std::max(gs, 1e-12);
}

}  // namespace

// ---------------------------------------------------------------------------
// spectral_slope

SlopeEstimate spectral_slope(const std::vector<double>& transect, double h, double eta_lo,
                             double eta_hi, int min_bins) {
  const int n = static_cast<int>(transect.size());
  if (n < 256) throw ArgumentError("spectral_slope: transect must have at least 256 samples");
  if (!(h > 0.0)) throw ArgumentError("spectral_slope: spacing must be positive");
  const double lo = eta_lo > 0.0 ? eta_lo : 2.0 * M_PI / (n * h);
  const double hi = eta_hi > 0.0 ? eta_hi : M_PI / (4.0 * h);
  if (!(hi > lo)) throw ArgumentError("spectral_slope: empty window");

  // Mean-subtract and window so leakage decays faster than any polynomial.
  const double mean = std::accumulate(transect.begin(), transect.end(), 0.0) / n;
  const std::vector<double> win = plateau_window(n);
  std::vector<double> samples(n);
  for (int i = 0; i < n; ++i) samples[i] = (transect[i] - mean) * win[i];

  const std::vector<Complex> spec = dft_forward(samples, {n});
  const int n_half = n / 2;
  std::vector<double> amp(n_half);
  for (int k2 = 1; k2 < n_half; ++k2) amp[k2] = std::abs(spec[k2]);

  // Noise floor: roundoff / discretization level near Nyquist.
  std::vector<double> top;
  for (int k2 = std::max(1, static_cast<int>(0.9 * n_half)); k2 < n_half; ++k2)
    top.push_back(amp[k2]);
  const double amp_max = *std::max_element(amp.begin() + 1, amp.end());
  const double floor_level = std::max(3.0 * median_of(top), 1e-14 * amp_max);

  SlopeEstimate est;
  est.floor = floor_level;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int nb = 0;
  for (int k2 = 1; k2 < n_half; ++k2) {
    const double eta = 2.0 * M_PI * k2 / (n * h);
    if (eta < lo || eta > hi || amp[k2] <= floor_level) continue;
    const double x = std::log(eta), y = std::log(amp[k2]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++nb;
  }
  est.n_bins = nb;
  if (nb < min_bins) {
    std::ostringstream os;
    os << "only " << nb << " usable bins above the noise floor (need " << min_bins << ")";
    est.reject_reason = os.str();
    return est;
  }
  const double denom = nb * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) {
    est.reject_reason = "degenerate frequency spread";
    return est;
  }
  est.slope = (nb * sxy - sx * sy) / denom;
  est.ok = true;
  return est;
}

// ---------------------------------------------------------------------------
// extract_front

FrontEstimate extract_front(const std::vector<double>& field, int nx, int ny, double h,
                            double band_lo, double band_hi, const std::vector<uint8_t>* mask,
                            double kappa, double rel_floor) {
  if (!(band_hi > band_lo))
    throw ArgumentError("extract_front: empty band (band_hi must exceed band_lo)");
  if (mask && mask->size() != field.size())
    throw ArgumentError("extract_front: mask size does not match the field");

  FrontEstimate out;
  out.nx = nx;
  out.ny = ny;

  // Envelope detection. The band-passed response to a kink is an oscillatory
  // wavelet, so its raw squared amplitude has a local maximum at every
  // carrier crest along slowly decaying tails. Demodulate with the Hilbert
  // quadrature pair: restricting the spectrum to a half-plane (sign of eta_x,
  // ties broken by eta_y) yields the in-phase / quadrature fields b and hb
  // whose energy b^2 + hb^2 is the ripple-free envelope, one crest per front,
  // independent of the front's orientation.
  {
    std::vector<Complex> spec = dft_forward(field, {nx, ny});
    std::vector<Complex> sb(spec.size()), sh(spec.size());
    for (int i = 0; i < nx; ++i) {
      const double ex = dft_frequency(i, nx, h);
      for (int j = 0; j < ny; ++j) {
        const double ey = dft_frequency(j, ny, h);
        const std::size_t c = static_cast<std::size_t>(i) * ny + j;
        const double g = band_gain(std::hypot(ex, ey), band_lo, band_hi);
        double s = ex > 0.0 ? 1.0 : (ex < 0.0 ? -1.0 : (ey > 0.0 ? 1.0 : (ey < 0.0 ? -1.0 : 0.0)));
        sb[c] = spec[c] * g;
        sh[c] = spec[c] * (g * s) * Complex(0.0, -1.0);
      }
    }
    const std::vector<double> b = dft_inverse_real(sb, {nx, ny});
    const std::vector<double> hb = dft_inverse_real(sh, {nx, ny});
    out.energy_map.resize(field.size());
    for (std::size_t c = 0; c < field.size(); ++c)
      out.energy_map[c] = b[c] * b[c] + hb[c] * hb[c];
  }

  // Polish: iron out residual discretization wiggles at half the carrier
  // wavelength. The envelope itself is smooth on that scale, so this cannot
  // displace a crest by more than about a cell.
  {
    const double sigma_s = M_PI / (0.5 * (band_lo + band_hi));
    std::vector<Complex> spec = dft_forward(out.energy_map, {nx, ny});
    for (int i = 0; i < nx; ++i) {
      const double ex = dft_frequency(i, nx, h);
      for (int j = 0; j < ny; ++j) {
        const double ey = dft_frequency(j, ny, h);
        const double es = (ex * ex + ey * ey) * sigma_s * sigma_s;
        spec[static_cast<std::size_t>(i) * ny + j] *= std::exp(-0.5 * es);
      }
    }
    out.energy_map = dft_inverse_real(spec, {nx, ny});
    for (double& v : out.energy_map) v = std::max(v, 0.0);
  }

  auto excluded = [&](std::size_t c) { return mask && (*mask)[c] != 0; };

  std::vector<double> vals;
  vals.reserve(out.energy_map.size());
  for (std::size_t c = 0; c < out.energy_map.size(); ++c)
    if (!excluded(c)) vals.push_back(out.energy_map[c]);
  if (vals.empty()) throw ArgumentError("extract_front: all cells are masked");
  const double med = median_of(vals);
  std::vector<double> dev(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) dev[i] = std::abs(vals[i] - med);
  const double mad = median_of(dev);
  // Smooth fields leak only super-polynomially small content into the band;
  // an absolute floor tied to the field scale keeps that (and FFT round-off)
  // from registering as ridge points, while genuine kinks sit orders of
  // magnitude above it. Calibrated on the single-plane-wave control: a
  // Gaussian's in-band energy is < 1e-12 of max|u|^2 while an x_+^k kink's
  // exceeds 1e-6 of it for the bands and orders in use.
  double max_abs = 0.0;
  for (double v : field) max_abs = std::max(max_abs, std::abs(v));
  double env_max = 0.0;
  for (std::size_t c = 0; c < out.energy_map.size(); ++c)
    if (!excluded(c)) env_max = std::max(env_max, out.energy_map[c]);
  out.threshold = std::max({med + kappa * mad, rel_floor * env_max, 1e-8 * max_abs * max_abs});

  // Skip a margin of cells next to the domain boundary: the DFT periodizes
  // the field, and any mismatch across the wrap registers as a spurious
  // boundary ridge.
  const int margin = 3;
  for (int i = margin; i < nx - margin; ++i)
    for (int j = margin; j < ny - margin; ++j) {
      const std::size_t c = static_cast<std::size_t>(i) * ny + j;
      if (excluded(c)) continue;
      const double e = out.energy_map[c];
      if (e <= out.threshold) continue;
      // A ridge cell must strictly beat at least one neighbour along the
      // transverse axis; plain >= would accept every cell of a plateau (or of
      // a translation-invariant field) as a maximum along the flat axis.
      auto crest = [&](double lo_v, double hi_v) {
        return (e > lo_v && e >= hi_v) || (e >= lo_v && e > hi_v);
      };
      const bool max_x = crest(out.energy_map[c - ny], out.energy_map[c + ny]);
      const bool max_y = crest(out.energy_map[c - 1], out.energy_map[c + 1]);
      if (max_x || max_y) {
        out.points.push_back({i, j});
        out.strength.push_back(e);
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// interaction_masks

std::vector<uint8_t> interaction_masks(const Scenario& sc, const Grid& grid, double t,
                                       double radius, double gamma_radius) {
  std::vector<uint8_t> mask(grid.size(), 0);
  const int n1 = grid.d > 1 ? grid.nx[1] : 1;
  const int n2 = grid.d > 2 ? grid.nx[2] : 1;

  std::vector<Vec> gamma_x;
  for (const Vec& q : sc.sample_gamma(sc.gamma_is_point ? 1 : 129))
    gamma_x.push_back(q.tail(grid.d));

  Vec y(grid.d + 1);
  y[0] = t;
  for (int i = 0; i < grid.nx[0]; ++i)
    for (int j = 0; j < n1; ++j)
      for (int l = 0; l < n2; ++l) {
        const Vec x = grid.coords(i, j, l);
        y.tail(grid.d) = x;
        bool hit = false;
        for (const auto& surf : sc.surfaces) {
          const double ph = surf.phi(y);
          const double gs = surf.grad_phi(y).tail(grid.d).norm();
          if (std::abs(ph) / std::max(gs, 1e-12) <= radius) {
            hit = true;
            break;
          }
        }
        if (!hit)
          for (const Vec& gx : gamma_x)
            if ((x - gx).norm() <= gamma_radius) {
              hit = true;
              break;
            }
        if (hit) mask[grid.index(i, j, l)] = 1;
      }
  return mask;
}

// ---------------------------------------------------------------------------
// q_agreement

QAgreement q_agreement(const FrontEstimate& front, const Scenario& sc, const Grid& grid, double t,
                       const std::vector<uint8_t>& mask, double cover_radius) {
  if (!sc.has_closed_form)
    throw UnsupportedError("q_agreement: scenario has no closed-form front");
  if (mask.size() != grid.size())
    throw ArgumentError("q_agreement: mask size does not match the grid");
  if (grid.d != 2) throw UnsupportedError("q_agreement: implemented for 2-D grids");

  QAgreement out;
  std::vector<Vec> ridge_pts;
  for (std::size_t p = 0; p < front.points.size(); ++p) {
    const auto [i, j] = front.points[p];
    const std::size_t c = grid.index(i, j);
    if (mask[c]) continue;
    const Vec x = grid.coords(i, j);
    const double d = closed_form_slice_distance(sc, t, x);
    out.mean_dist += d;
    out.max_dist = std::max(out.max_dist, d);
    ridge_pts.push_back(x);
  }
  out.n_points = static_cast<int>(ridge_pts.size());
  if (ridge_pts.empty()) {
    out.off = true;
    return out;
  }
  out.off = false;
  out.mean_dist /= out.n_points;

  // Coverage: unmasked grid cells on the predicted front, covered when a
  // ridge point lies within cover_radius.
  std::size_t n_front = 0, n_cov = 0;
  for (int i = 0; i < grid.nx[0]; ++i)
    for (int j = 0; j < grid.nx[1]; ++j) {
      const std::size_t c = grid.index(i, j);
      if (mask[c]) continue;
      const Vec x = grid.coords(i, j);
      if (closed_form_slice_distance(sc, t, x) > kFrontCellBand * grid.h) continue;
      ++n_front;
      for (const Vec& r : ridge_pts)
        if ((x - r).norm() <= cover_radius) {
          ++n_cov;
          break;
        }
    }
  out.coverage = n_front > 0 ? static_cast<double>(n_cov) / n_front : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// front_band_energy

double front_band_energy(const std::vector<double>& field, int nx, int ny, double h,
                         const Scenario& sc, double t, double band_lo, double band_hi,
                         const std::vector<uint8_t>& mask, double tube_radius, const Grid& grid) {
  if (!sc.has_closed_form)
    throw UnsupportedError("front_band_energy: scenario has no closed-form front");
  const std::vector<double> filtered = band_pass_2d(field, nx, ny, h, band_lo, band_hi);
  double acc = 0.0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const std::size_t c = static_cast<std::size_t>(i) * ny + j;
      if (mask[c]) continue;
      const Vec x = grid.coords(i, j);
      if (closed_form_slice_distance(sc, t, x) > tube_radius) continue;
      acc += filtered[c] * filtered[c];
    }
  return acc * h * h;
}

// ---------------------------------------------------------------------------
// cubic_discriminator

namespace {

bool grids_match(const Grid& a, const Grid& b) {
  if (a.d != b.d || a.nx != b.nx) return false;
  if (std::abs(a.h - b.h) > 1e-12) return false;
  for (int i = 0; i < a.d; ++i)
    if (std::abs(a.lo[i] - b.lo[i]) > 1e-12) return false;
  return true;
}

double matched_time(const GridField& f, double t) {
  if (f.times.empty()) throw ArgumentError("cubic_discriminator: run has no recorded snapshots");
  double best = f.times[0];
  for (double ti : f.times)
    if (std::abs(ti - t) < std::abs(best - t)) best = ti;
  const double tol = std::max(1e-9, 0.51 * f.dt);
  if (std::abs(best - t) > tol) {
    std::ostringstream os;
    os << "cubic_discriminator: no snapshot within " << tol << " of t = " << t;
    throw ArgumentError(os.str());
  }
  return best;
}

}  // namespace

DiscriminatorVerdict cubic_discriminator(const GridField& run_cubic, const GridField& run_quad,
                                         const GridField& run_linear, const Scenario& sc, double t,
                                         const DiscriminatorOptions& opt) {
  if (!grids_match(run_cubic.grid, run_quad.grid) || !grids_match(run_cubic.grid, run_linear.grid))
    throw ArgumentError("cubic_discriminator: runs use mismatched grids");
  const Grid& grid = run_cubic.grid;
  if (grid.d != 2) throw UnsupportedError("cubic_discriminator: implemented for 2-D grids");

  const double ta = matched_time(run_cubic, t);
  if (std::abs(matched_time(run_quad, t) - ta) > 1e-9 ||
      std::abs(matched_time(run_linear, t) - ta) > 1e-9)
    throw ArgumentError("cubic_discriminator: recorded times differ across runs");

  const int nx = grid.nx[0], ny = grid.nx[1];
  const double h = grid.h;
  DiscriminatorVerdict v;
  v.band_lo = opt.band_lo > 0.0 ? opt.band_lo : 2.0 * M_PI / (24.0 * h);
  v.band_hi = opt.band_hi > 0.0 ? opt.band_hi : 2.0 * M_PI / (8.0 * h);

  // Mask incoming surfaces, the meeting locus, and an edge margin (the
  // band-pass filter is periodic, so domain edges ring).
  std::vector<uint8_t> mask = interaction_masks(sc, grid, ta, opt.mask_radius_cells * h,
                                                opt.gamma_mask_radius_cells * h);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      if (i < kEdgeMarginCells || i >= nx - kEdgeMarginCells || j < kEdgeMarginCells ||
          j >= ny - kEdgeMarginCells)
        mask[grid.index(i, j)] = 1;

  const std::vector<double>& uc = run_cubic.at_time(ta);
  const std::vector<double>& uq = run_quad.at_time(ta);
  const std::vector<double>& ul = run_linear.at_time(ta);

  const double tube = opt.tube_radius_cells * h;
  v.energy_cubic = front_band_energy(uc, nx, ny, h, sc, ta, v.band_lo, v.band_hi, mask, tube, grid);
  v.energy_quadratic =
      front_band_energy(uq, nx, ny, h, sc, ta, v.band_lo, v.band_hi, mask, tube, grid);
  v.energy_linear =
      front_band_energy(ul, nx, ny, h, sc, ta, v.band_lo, v.band_hi, mask, tube, grid);
  const double tiny = 1e-300;
  v.ratio_quadratic = v.energy_cubic / std::max(v.energy_quadratic, tiny);
  v.ratio_linear = v.energy_cubic / std::max(v.energy_linear, tiny);

  const FrontEstimate front = extract_front(uc, nx, ny, h, v.band_lo, v.band_hi, &mask);
  v.agreement = q_agreement(front, sc, grid, ta, mask, kCoverRadiusCells * h);

  v.on = v.ratio_quadratic >= opt.r_min && v.ratio_linear >= opt.r_min && !v.agreement.off &&
         v.agreement.mean_dist <= opt.dist_tol_cells * h && v.agreement.coverage >= opt.cover_min;
  return v;
}

}  // namespace triplewave
