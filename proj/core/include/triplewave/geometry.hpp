#pragma once

// Characteristic geometry for second-order strictly hyperbolic operators
//   P = alpha(y)^2 d_t^2 - sum_jk h_jk(y) d_j d_k + first order,
// written in spacetime coordinates y = (t, x_1 .. x_{n-1}).
//
// Provides the principal symbol p(y,eta) = alpha^2 tau^2 - <h xi, xi>,
// Hamiltonian ray tracing on {p = 0}, triple intersections of characteristic
// hypersurfaces, the null fiber of a conormal bundle, flow-out front meshes
// with caustic flags, and apparent-front-speed measurements on mesh slices.

#include <array>
#include <complex>
#include <cstdint>
#include <optional>

#include "triplewave/common.hpp"

namespace triplewave {

/// A point of phase space: spacetime point y = (t, x) and covector eta = (tau, xi).
struct CovectorPoint {
  Vec y;
  Vec eta;
};

/// Coefficients of the operator. `metric` returns the spatial (n-1)x(n-1)
/// positive-definite matrix h(y). `first_order` returns the n coefficients
/// (b_0, b_1, ..) of b_0 d_t + sum_j b_j d_{x_j}; it may be empty (no first-order part).
/// Analytic derivative callbacks are optional; when absent, centered finite
/// differences with step h_fd = cbrt(machine eps) * scale are used.
class HyperbolicOperator {
 public:
  struct Coefficients {
    int dim = 4;  // spacetime dimension n >= 2
    std::function<double(const Vec&)> alpha;
    std::function<Mat(const Vec&)> metric;
    std::function<Vec(const Vec&)> first_order;              // optional
    std::function<Vec(const Vec&)> alpha_grad;               // optional, d alpha/dy_i
    std::function<std::vector<Mat>(const Vec&)> metric_grad; // optional, d h/dy_i per i
    std::optional<std::pair<Vec, Vec>> domain_box;           // optional coefficient domain
  };

  HyperbolicOperator() = default;
  explicit HyperbolicOperator(Coefficients c);

  /// alpha = 1, h = identity.
  static HyperbolicOperator minkowski(int dim);
  /// alpha = 1, h = c(x)^2 * identity with a user speed function of the spatial point.
  static HyperbolicOperator isotropic(int dim, std::function<double(const Vec&)> speed);
  /// Minkowski plus a constant damping term beta * d_t (used in transport tests).
  static HyperbolicOperator damped_minkowski(int dim, double beta);

  int dim() const { return coef_.dim; }
  double alpha(const Vec& y) const;
  Mat metric(const Vec& y) const;
  Vec first_order(const Vec& y) const;  // zero vector if absent
  bool has_first_order() const { return static_cast<bool>(coef_.first_order); }

  /// Gradient of alpha and of each metric entry w.r.t. all n coordinates;
  /// analytic when provided, centered differences otherwise.
  Vec alpha_grad(const Vec& y) const;
  std::vector<Mat> metric_grad(const Vec& y) const;

  /// Throws DomainError if y lies outside the declared coefficient domain.
  void require_in_domain(const Vec& y) const;

  /// Largest wave speed sqrt(lambda_max(h))/alpha over a list of probe points.
  double max_speed(const std::vector<Vec>& probes) const;

 private:
  Coefficients coef_;
};

/// p(y, eta) = alpha(y)^2 tau^2 - <h(y) xi, xi>.
double principal_symbol(const HyperbolicOperator& op, const CovectorPoint& pt);

/// Hamilton field H_p = (dp/deta, -dp/dy) at pt.
struct PhaseTangent {
  Vec ydot;
  Vec etadot;
};
PhaseTangent hamilton_field(const HyperbolicOperator& op, const CovectorPoint& pt);

/// A characteristic hypersurface as the zero set of a level function.
/// `form` carries structural metadata used by the solver's exact traveling
/// waves: a plane phi = t - omega.x + shift (|omega| = speed normalized) or a
/// forward light cone phi = t - |x - center| + shift.
class CharSurface {
 public:
  enum class Form { plane, cone, generic };

  CharSurface() = default;
  CharSurface(std::function<double(const Vec&)> phi, std::function<Vec(const Vec&)> grad_phi,
              std::string label);

  static CharSurface plane(const Vec& omega_spatial, double shift, std::string label);
  static CharSurface cone(const Vec& center_spatial, double shift, std::string label);

  double phi(const Vec& y) const { return phi_(y); }
  Vec grad_phi(const Vec& y) const;
  const std::string& label() const { return label_; }

  Form form() const { return form_; }
  const Vec& omega() const { return omega_; }    // plane only
  const Vec& center() const { return center_; }  // cone only
  double shift() const { return shift_; }

 private:
  std::function<double(const Vec&)> phi_;
  std::function<Vec(const Vec&)> grad_phi_;  // optional; finite differences if empty
  std::string label_;
  Form form_ = Form::generic;
  Vec omega_, center_;
  double shift_ = 0.0;
};

/// max |p(y, dphi(y))| over the samples. Throws ArgumentError on an empty set.
double eikonal_residual(const HyperbolicOperator& op, const CharSurface& surf,
                        const std::vector<Vec>& sample_pts);

/// Adaptive integrator controls for trace_ray. `record_s` forces samples at
/// exactly those parameter values (in addition to accepted steps when
/// `record_accepted`). Integration is deterministic for fixed controls.
struct StepControl {
  double rtol = 1e-10;
  double atol = 1e-13;
  double h_init = 1e-3;
  double h_min = 1e-14;
  double h_max = 0.25;
  long max_steps = 2000000;
  bool record_accepted = true;
  std::vector<double> record_s;
};

struct StepStats {
  long n_accepted = 0;
  long n_rejected = 0;
  double max_null_drift = 0.0;  // max |p(s) - p(0)|
};

/// A sampled null bicharacteristic. `amplitude` is filled by the transport
/// routines when requested and is otherwise empty.
struct Ray {
  std::vector<double> s;
  std::vector<CovectorPoint> pts;
  std::vector<Complex> amplitude;
  StepStats stats;
};

inline constexpr double kTolNull = 1e-8;   // relative null-start check
inline constexpr double kTolRay = 1e-8;    // null conservation along rays

/// Integrate the Hamilton field from a null starting covector over [0, s_max].
/// Throws ArgumentError when the start is not null to tolerance,
/// IntegrationError on blow-up or step underflow.
Ray trace_ray(const HyperbolicOperator& op, const CovectorPoint& start, double s_max,
              const StepControl& ctrl = {});

/// Result of intersecting three characteristic hypersurfaces over a box.
struct TripleIntersection {
  std::vector<Vec> points;                 // refined points with |phi_j| <= tol
  std::vector<Mat> normals;                // 3 x n matrix of unit normals per point
  std::vector<double> min_singular_value;  // of the unit-normal matrix
  std::vector<uint8_t> transversal;        // per point
  bool all_transversal = true;
};

/// Scan `grid_res`^n cells of [lo, hi], refine candidate cells by Gauss-Newton
/// on (phi_1, phi_2, phi_3), deduplicate, and report transversality via the
/// smallest singular value of the stacked unit normals.
TripleIntersection triple_intersection(const std::array<CharSurface, 3>& surfs, const Vec& lo,
                                       const Vec& hi, int grid_res, double tol = 1e-10,
                                       double tol_transversal = 1e-3);

/// Parametrize {eta in span(normals) : p(q, eta) = 0, |eta| = 1}.
/// Returns angular_res points per connected circle (the forward, tau > 0
/// circle first); empty with `definite` diagnostic set when p restricted to
/// the fiber is definite. Throws ArgumentError when the normals do not span a
/// 3-dimensional fiber.
struct NullFiber {
  std::vector<CovectorPoint> points;
  bool definite = false;  // true when the restricted form had no null directions
};
NullFiber conormal_null_fiber(const HyperbolicOperator& op, const Vec& q, const Mat& normals,
                              int angular_res);

/// Flow-out front mesh over a structured (gamma sample, fiber direction, s) grid.
/// `jacobian_det` is the determinant of the spatial components of the
/// parameter-to-spacetime differential (gamma index, fiber index, s), signed
/// when the parameter count equals the spatial dimension (the generic case)
/// and an unsigned Gram volume otherwise. `caustic_flag` marks nodes where
/// |det| drops below kTolCaustic * (mesh median) or where the signed
/// determinant changes sign across a parameter-grid neighbor (the discrete
/// witness of a zero crossing between nodes); nodes at s = 0, where the
/// parametrization degenerates on the meeting locus itself, are excluded.
struct FrontMesh {
  int n_gamma = 0, n_fiber = 0, n_s = 0;
  int dim = 0;
  std::vector<double> s_values;
  std::vector<Vec> points;              // flattened [ig][ifib][is]
  std::vector<Vec> covectors;
  std::vector<double> jacobian_det;
  std::vector<uint8_t> caustic_flag;
  std::vector<uint8_t> node_ok;         // false where ray tracing failed (hole)
  double jacobian_median = 0.0;

  std::size_t index(int ig, int ifib, int is) const {
    return (static_cast<std::size_t>(ig) * n_fiber + ifib) * n_s + is;
  }
  std::size_t size() const { return points.size(); }
};

inline constexpr double kTolCaustic = 1e-6;

FrontMesh flow_out(const HyperbolicOperator& op, const std::vector<Vec>& gamma_samples,
                   const std::vector<std::vector<CovectorPoint>>& fibers, double s_max, int res,
                   const StepControl& ctrl = {}, int threads = 1);

/// Connected caustic components of a mesh (6-neighborhood on the parameter
/// grid) with an estimated corank of the degenerate differential.
struct CausticComponent {
  std::vector<std::size_t> nodes;
  int corank = 1;
};
struct CausticReport {
  std::vector<CausticComponent> components;
  std::size_t n_flagged = 0;
};
CausticReport caustic_scan(const FrontMesh& mesh);

/// Radius-vs-time of the mesh trace on the slice x_3 = x3 (last spatial
/// coordinate), radius measured from `center` in the (x_1, x_2) plane.
/// Crossing points are interpolated along rays; dR/dt uses a local linear fit.
/// Throws InsufficientDataError when fewer than 8 crossings exist.
struct FrontSpeedSample {
  double t = 0, R = 0, dRdt = 0;
};
std::vector<FrontSpeedSample> apparent_front_speed(const FrontMesh& mesh, double x3,
                                                   const Vec& center,
                                                   const std::vector<double>& t_eval);

}  // namespace triplewave
