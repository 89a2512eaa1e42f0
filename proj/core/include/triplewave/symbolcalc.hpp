#pragma once

// Order bookkeeping for conormal classes, the product symbol carried by the
// meeting locus, subprincipal symbols, and amplitude transport along rays.
//
// Conventions used throughout (fixed here, documented once):
//  * A distribution conormal to a codimension-k submanifold of n-space with
//    oscillatory-integral symbol of order m lies in the class I^mu with
//    mu = m + (2k - n)/4; `ConormalOrder` converts both ways.
//  * The full symbol of the operator is taken in the same normalization as
//    the principal symbol p = alpha^2 tau^2 - <h xi, xi>, i.e.
//    p_full = -exp(-i y.eta) P exp(i y.eta). Its first-order part is
//    p1 = -i (b_0 tau + b . xi) for a real first-order term b_0 d_t + b . d_x.
//  * subprincipal_symbol returns c = p1 - (1/2i) sum_j d^2 p / dy_j deta_j.
//    With this sign, c = 0 for any constant-coefficient operator without a
//    first-order term, and c = -i beta tau for the damped operator
//    box + beta d_t.
//  * The half-density transport equation along a ray is realized as
//      da/ds + (c_t + (1/2) d/ds log J) a = 0,  c_t := i * c,
//    where J is the ray-tube Jacobian. c_t is real for real coefficients; for
//    the damped operator c_t = beta tau, giving |a(s)| = |a0| exp(-beta tau s),
//    which matches the plane-wave decay exp(-beta t / 2) of the PDE.

#include "triplewave/geometry.hpp"
#include "triplewave/scenarios.hpp"

namespace triplewave {

/// Symbol-order <-> class-order conversion for codimension-k conormal classes.
struct ConormalOrder {
  double m = 0;   // symbol order
  int codim = 1;  // k
  int n = 4;      // ambient dimension

  double class_order() const { return m + (2.0 * codim - n) / 4.0; }
  static ConormalOrder from_class(double mu, int codim, int n) {
    return ConormalOrder{mu - (2.0 * codim - n) / 4.0, codim, n};
  }
};

/// The unique non-negative integer in [-m-2, -m-1). Requires m < -1.
int k_of_m(double m);

/// Class order of an N-fold product of conormal distributions of class order
/// m - n/4 + 1/2 on the same hypersurface: m - n/4 + 1/2 - (N-1) * k_of_m(m).
double product_order(double m, int N, int n);

/// Orders attached to a triple interaction with incoming symbol order m in
/// n-space: the new front carries class order 3m - n/4 while the incoming
/// waves carry m - n/4 + 1/2. `hypothesis_ok` records m < -(n+7)/2; outside
/// that range the values are still returned (used for out-of-range
/// experiments) with the flag cleared.
struct TripleOrderReport {
  double output_order = 0;
  double incoming_order = 0;
  bool hypothesis_ok = true;
};
TripleOrderReport triple_output_order(double m, int n);

/// One factor of the product symbol: a 1-D symbol in the frequency conormal
/// to its surface, restricted to the meeting locus.
struct SymbolFactor {
  std::function<Complex(double)> a;  // a_j(eta_j)
  double order_m = 0;
  bool declared_on_gamma = false;
  double elliptic_c = 0;  // declared ellipticity constant; 0 = not declared
};

/// Product-type symbol data on the meeting locus: pointwise product of three
/// 1-D factors. Linear reparametrizations eta_j -> lambda_j eta_j act
/// factor-wise with density factor lambda_j (see `pullback`).
class ProductSymbolV {
 public:
  std::array<SymbolFactor, 3> factors;

  Complex eval(double eta1, double eta2, double eta3) const {
    return factors[0].a(eta1) * factors[1].a(eta2) * factors[2].a(eta3);
  }

  /// The factor-wise pullback under eta_j -> lambda_j eta_j:
  /// a_j(eta) -> lambda_j a_j(lambda_j eta).
  ProductSymbolV pullback(const std::array<double, 3>& lambda) const;

  /// Check |a_j(eta)| >= c <eta>^m over the sampled range for each declared
  /// factor; returns per-factor pass flags.
  std::array<bool, 3> elliptic_on(const std::vector<double>& eta_samples) const;
};

/// Requires all three factors declared on the meeting locus.
ProductSymbolV build_product_symbol(const std::array<SymbolFactor, 3>& factors);

/// Subprincipal symbol c at pt (see file header for the sign convention).
Complex subprincipal_symbol(const HyperbolicOperator& op, const CovectorPoint& pt);

/// Real transport damping coefficient c_t = i * subprincipal_symbol for
/// real-coefficient operators (imaginary part returned too for generality).
Complex transport_coefficient(const HyperbolicOperator& op, const CovectorPoint& pt);

/// Amplitude samples along a ray satisfying the half-density transport law.
struct SymbolOnRay {
  std::vector<double> s;
  std::vector<Complex> a;
  std::vector<Complex> c;  // subprincipal symbol along the ray
};

/// Integrate da/ds + (c_t + (1/2) d/ds log J) a = 0 along the traced ray.
/// `tube_jacobian` evaluates J(s) > 0; it may come from closed forms or from
/// finite differences across neighboring rays. Throws CausticError at the
/// first sample where J <= j_floor * J(0).
SymbolOnRay transport_amplitude(const HyperbolicOperator& op, const Ray& ray, Complex a0,
                                const std::function<double(double)>& tube_jacobian,
                                double j_floor = 1e-12);

/// Ray-tube Jacobian from a bundle of neighboring rays sharing the s grid:
/// Gram volume of the differences (center columns are d/dparam estimates).
/// Returns a callable interpolating J(s) linearly between samples.
std::function<double(double)> tube_jacobian_from_rays(const Ray& center,
                                                      const std::vector<Ray>& neighbors,
                                                      const std::vector<double>& param_steps);

/// Existence-level prediction for the new front of a triple interaction:
/// output/incoming orders, the on/off predicate (third u-derivative of the
/// nonlinearity on the meeting locus), and a transported amplitude profile
/// along flow-out rays (order/shape only; absolute constants are not modeled).
struct LeadingTermReport {
  double output_order = 0;
  double incoming_order = 0;
  bool hypothesis_ok = true;
  std::vector<double> gamma_params;
  std::vector<Vec> gamma_points;
  std::vector<double> d3f_values;
  std::vector<uint8_t> predicate_on;
  bool any_on = false;
  // |a(s)| along one flow-out ray per Gamma sample (empty when tracing fails).
  std::vector<std::vector<double>> amplitude_profiles;
  std::vector<double> profile_s;
};

LeadingTermReport predicted_leading_term(const Scenario& sc, double m,
                                         const std::function<double(const Vec&)>& d3f_on_gamma,
                                         int n_gamma = 9, double s_max = 1.0, int s_res = 17);

}  // namespace triplewave
