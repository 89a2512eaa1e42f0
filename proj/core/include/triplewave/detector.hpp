#pragma once

// Singular-front extraction and order estimation on solver output:
// spectral-slope fits of 1-D transects, band-pass ridge maps of 2-D fields,
// agreement of detected ridges with a predicted front surface, and the
// cubic on/off discriminator comparing matched runs.

#include <array>
#include <cstdint>

#include "triplewave/solver.hpp"

namespace triplewave {

/// Least-squares slope of log|u_hat| vs log|eta| over [eta_lo, eta_hi].
/// Bins below the estimated noise floor are dropped; `ok` is false (with a
/// reason) when fewer than `min_bins` usable bins remain, e.g. for
/// super-polynomially decaying (smooth) inputs.
struct SlopeEstimate {
  bool ok = false;
  double slope = 0.0;
  int n_bins = 0;
  double floor = 0.0;
  std::string reject_reason;
};
SlopeEstimate spectral_slope(const std::vector<double>& transect, double h, double eta_lo = 0.0,
                             double eta_hi = 0.0, int min_bins = 8);

/// Band-pass energy map plus ridge points (local maxima above
/// median + kappa * MAD, computed over unmasked cells).
struct FrontEstimate {
  int nx = 0, ny = 0;
  std::vector<std::array<int, 2>> points;  // (i, j) grid indices of ridge cells
  std::vector<double> strength;            // demodulated band energy there
  std::vector<double> energy_map;          // full envelope (demodulated) map
  double threshold = 0.0;
};

inline constexpr double kRidgeKappa = 6.0;

/// Prominence floor as a fraction of the strongest unmasked envelope value.
/// A localized front's envelope carries shoulder and tail ridges of its own;
/// robust statistics over a mostly empty map sit far below them, so ridge
/// cells must also reach a fixed fraction of the crest. Calibrated once on
/// the single-plane-wave control (crest localizes to within 2 cells) and
/// frozen.
inline constexpr double kRidgeRelFloor = 0.3;

/// `mask` (optional, size nx*ny, nonzero = excluded) removes cells from both
/// threshold statistics and ridge extraction. Band edges are in angular
/// frequency; the filter has smooth skirts. Throws ArgumentError on
/// an empty band.
FrontEstimate extract_front(const std::vector<double>& field, int nx, int ny, double h,
                            double band_lo, double band_hi,
                            const std::vector<uint8_t>* mask = nullptr,
                            double kappa = kRidgeKappa, double rel_floor = kRidgeRelFloor);

/// Mask of cells within `radius` of any incoming surface at time t, or within
/// `gamma_radius` of the projection of the meeting locus.
std::vector<uint8_t> interaction_masks(const Scenario& sc, const Grid& grid, double t,
                                       double radius, double gamma_radius);

/// Distances from ridge points (outside masks) to the predicted front at time
/// t, plus the fraction of the unmasked front arc covered within
/// `cover_radius`. `off` is set when no ridge points survive masking.
struct QAgreement {
  double mean_dist = 0.0;
  double max_dist = 0.0;
  double coverage = 0.0;
  int n_points = 0;
  bool off = true;
};
QAgreement q_agreement(const FrontEstimate& front, const Scenario& sc, const Grid& grid, double t,
                       const std::vector<uint8_t>& mask, double cover_radius);

/// Band energy of the field summed over the front annulus (|distance to the
/// predicted front| <= tube_radius), excluding masked cells.
double front_band_energy(const std::vector<double>& field, int nx, int ny, double h,
                         const Scenario& sc, double t, double band_lo, double band_hi,
                         const std::vector<uint8_t>& mask, double tube_radius, const Grid& grid);

/// Verdict of the matched-run comparison. ON requires the cubic run's front
/// band energy to exceed both controls by `r_min` AND its ridge to agree with
/// the predicted front (mean distance <= dist_tol, coverage >= cover_min).
struct DiscriminatorVerdict {
  bool on = false;
  double energy_cubic = 0.0, energy_quadratic = 0.0, energy_linear = 0.0;
  double ratio_quadratic = 0.0, ratio_linear = 0.0;
  QAgreement agreement;
  double band_lo = 0.0, band_hi = 0.0;
};

struct DiscriminatorOptions {
  double r_min = 10.0;
  double dist_tol_cells = 2.0;   // mean ridge distance tolerance, in units of h
  double cover_min = 0.6;
  double mask_radius_cells = 3.0;
  double gamma_mask_radius_cells = 6.0;
  double band_lo = 0.0, band_hi = 0.0;  // 0 -> defaults scaled to the grid
  double tube_radius_cells = 3.0;
};

DiscriminatorVerdict cubic_discriminator(const GridField& run_cubic, const GridField& run_quad,
                                         const GridField& run_linear, const Scenario& sc, double t,
                                         const DiscriminatorOptions& opt = {});

}  // namespace triplewave
