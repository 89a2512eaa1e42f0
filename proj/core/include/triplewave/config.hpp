#pragma once

// Run configuration for the command-line pipelines. The on-disk format is a
// single JSON document; parsing is fail-closed (unknown keys are errors) and
// round-trips losslessly through to_json()/parse().

#include <filesystem>

#include "triplewave/anisonorm.hpp"
#include "triplewave/detector.hpp"
#include "triplewave/scenarios.hpp"
#include "triplewave/solver.hpp"

namespace triplewave {

struct ProfileConfig {
  std::string kind = "xplus";
  double k = 4.0;
  double m = -5.0;
  double eps_cells = 4.0;  // regularization width in grid cells
  double width = 0.5;
  double amplitude = 1.0;
};

struct CutoffConfig {
  double t_on = -1.0;
  double ramp = 0.5;
  double r_in = 1.2;
  double r_out = 1.8;
};

struct GridConfig {
  int n = 512;
  double half_width = 3.5;
};

struct SolveConfig {
  double t0 = -2.0;
  double t_end = 1.5;
  double cfl = 0.4;
  std::vector<double> record_times{0.5, 1.0, 1.5};
  std::string bc = "exact-linear";
};

struct DetectConfig {
  double time = 1.5;
  double band_lo_cells = 24.0;  // wavelength in cells of the band's long edge
  double band_hi_cells = 8.0;   // wavelength in cells of the band's short edge
  double r_min = 10.0;
  double dist_tol_cells = 2.0;
  double cover_min = 0.6;
  double mask_radius_cells = 3.0;
  double gamma_mask_radius_cells = 6.0;
  double tube_radius_cells = 3.0;
};

struct RaysConfig {
  int n_gamma = 5;
  int n_fiber = 16;
  double s_max = 1.0;
  int res = 33;
};

struct NormsConfig {
  std::vector<std::string> suites{"thresholds", "kernel", "closure", "embedding"};
  int base_grid = 256;
  int refinements = 3;
  double delta = kDefaultDelta;
};

struct ToleranceConfig {
  double tol_eikonal = 1e-10;
  double rtol_ray = 1e-10;
  double tol_transversal = 1e-3;
  double closed_form_max = 1e-8;
};

struct RunConfig {
  std::string scenario = "fig1-2d";
  double a = 1.0;
  double b = 1.0;
  double lens_amp = 0.3;
  std::uint64_t seed = 20260814;
  int threads = 1;
  GridConfig grid;
  ProfileConfig profile;  // applied to all three waves
  CutoffConfig cutoff;
  SolveConfig solve;
  DetectConfig detect;
  RaysConfig rays;
  NormsConfig norms;
  ToleranceConfig tolerances;

  ScenarioParams scenario_params() const;
  Scenario make() const;
  Grid make_grid() const;
  std::array<ConormalProfile, 3> make_profiles() const;
  std::function<double(const Vec&)> make_cutoff_fn() const;
};

/// Parse a JSON document with unknown-key rejection; error messages carry the
/// JSON pointer of the offending key. Throws ArgumentError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Serialize with alphabetically sorted keys (byte-stable; round-trips
/// through parse_config losslessly).
std::string to_json_text(const RunConfig& cfg);

}  // namespace triplewave
