#pragma once

// Built-in reference configurations with closed-form front surfaces, used as
// oracles for the geometry pipeline and as initial-data factories for the
// solver:
//
//   planes-cylinder  n=4, three characteristic planes meeting on the line
//                    {t = x1 = x2 = 0}; new front t = sqrt(x1^2 + x2^2).
//   planes-cone      n=4, planes t = x_j meeting on {t = x1 = x2 = x3};
//                    new front (3t - x1 - x2 - x3)^2 = sum of the three
//                    cyclic squares.
//   spheres          n=4, three light cones with vertices (0,0,0), (2a,0,0),
//                    (0,2b,0) meeting on the hyperbola x1 = a, x2 = b,
//                    t = sqrt(x3^2 + a^2 + b^2); new front
//                    (x1-a)^2 + (x2-b)^2 = (sqrt(t^2 - x3^2) - sqrt(a^2+b^2))^2.
//   fig1-2d          n=3, three non-parallel characteristic lines through the
//                    origin; the meeting locus is the single spacetime point 0
//                    and the new front is the cone t = |x|. Main solver case.
//   lens             n=3, isotropic variable speed c(x) = 1 + amp * exp(-|x|^2);
//                    no closed form, exists for caustic tests.

#include <string>

#include "triplewave/geometry.hpp"

namespace triplewave {

enum class ScenarioId { planes_cylinder, planes_cone, spheres, fig1_2d, lens };

std::string to_string(ScenarioId id);
ScenarioId scenario_id_from_string(const std::string& name);

struct ScenarioParams {
  double a = 1.0;  // spheres: half-distance of center 2 along x1
  double b = 1.0;  // spheres: half-distance of center 3 along x2
  double lens_amp = 0.3;
  Vec lens_source;  // spacetime point of the lens point source; default (0, -4, 0)
};

class Scenario {
 public:
  ScenarioId id;
  std::string name;
  HyperbolicOperator op;
  std::vector<CharSurface> surfaces;
  ScenarioParams params;

  bool has_closed_form = false;
  /// Implicit closed form G(y) = 0 of the flow-out front (causal branch).
  std::function<double(const Vec&)> closed_form_Q;
  std::function<Vec(const Vec&)> closed_form_Q_grad;

  /// Parametrization of the meeting locus Gamma; for point loci the range is
  /// a single value.
  std::function<Vec(double)> gamma;
  std::pair<double, double> gamma_range{0.0, 0.0};
  bool gamma_is_point = false;

  /// Uniform Gamma samples in the chart parameter (a single point when
  /// gamma_is_point).
  std::vector<Vec> sample_gamma(int count) const;

  /// A 3 x n matrix whose rows span the conormal fiber at q: the three surface
  /// normals, or the coordinate covectors dt, dx1, dx2 for point loci in n=3.
  Mat fiber_normals(const Vec& q) const;
};

Scenario make_scenario(ScenarioId id, const ScenarioParams& params = {});
Scenario make_scenario(const std::string& id, const ScenarioParams& params = {});

/// max over points of |G| / |grad G| (first-order point-to-surface distance).
/// Returns 0 on an empty set; throws UnsupportedError without a closed form.
double closed_form_distance(const Scenario& sc, const std::vector<Vec>& points);

}  // namespace triplewave
