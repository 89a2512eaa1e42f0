#include "triplewave/symbolcalc.hpp"

#include <cmath>

namespace triplewave {

int k_of_m(double m) {
  if (!(m < -1.0)) throw DomainError("k_of_m: requires m < -1");
  // The unique integer in [-m-2, -m-1).
  const int k = static_cast<int>(std::ceil(-m - 2.0));
  return k;
}

double product_order(double m, int N, int n) {
  if (N < 1) throw ArgumentError("product_order: N must be >= 1");
  return m - n / 4.0 + 0.5 - (N - 1) * static_cast<double>(k_of_m(m));
}

TripleOrderReport triple_output_order(double m, int n) {
  TripleOrderReport r;
  r.output_order = 3.0 * m - n / 4.0;
  r.incoming_order = m - n / 4.0 + 0.5;
  r.hypothesis_ok = m < -(n + 7.0) / 2.0;
  return r;
}

ProductSymbolV ProductSymbolV::pullback(const std::array<double, 3>& lambda) const {
  ProductSymbolV out = *this;
  for (int j = 0; j < 3; ++j) {
    const auto a = factors[j].a;
    const double lam = lambda[j];
    if (!(lam != 0.0)) throw ArgumentError("pullback: zero scaling factor");
    out.factors[j].a = [a, lam](double eta) { return lam * a(lam * eta); };
  }
  return out;
}

std::array<bool, 3> ProductSymbolV::elliptic_on(const std::vector<double>& eta_samples) const {
  if (eta_samples.empty()) throw ArgumentError("elliptic_on: empty sample set");
  std::array<bool, 3> pass{false, false, false};
  for (int j = 0; j < 3; ++j) {
    const auto& f = factors[j];
    if (!(f.elliptic_c > 0.0)) continue;  // not declared elliptic
    bool ok = true;
    for (double eta : eta_samples) {
      const double bound = f.elliptic_c * std::pow(1.0 + eta * eta, f.order_m / 2.0);
      if (std::abs(f.a(eta)) < bound) {
        ok = false;
        break;
      }
    }
    pass[j] = ok;
  }
  return pass;
}

ProductSymbolV build_product_symbol(const std::array<SymbolFactor, 3>& factors) {
  for (const auto& f : factors) {
    if (!f.a) throw ArgumentError("build_product_symbol: missing factor callable");
    if (!f.declared_on_gamma)
      throw ArgumentError("build_product_symbol: factor not declared on the meeting locus");
  }
  ProductSymbolV v;
  v.factors = factors;
  return v;
}

Complex subprincipal_symbol(const HyperbolicOperator& op, const CovectorPoint& pt) {
  const int n = op.dim();
  if (pt.y.size() != n || pt.eta.size() != n)
    throw ArgumentError("subprincipal_symbol: dimension mismatch");
  const double tau = pt.eta[0];
  const Vec xi = pt.eta.tail(n - 1);

  // First-order symbol part: p1 = -i (b0 tau + b . xi).
  const Vec b = op.first_order(pt.y);
  const Complex p1 = Complex(0.0, -1.0) * (b[0] * tau + b.tail(n - 1).dot(xi));

  // S = sum_j d^2 p / dy_j deta_j
  //   = 4 alpha (d alpha/dt) tau - 2 sum_i (dh/dx_i xi)_i.
  const double a = op.alpha(pt.y);
  const Vec da = op.alpha_grad(pt.y);
  const std::vector<Mat> dh = op.metric_grad(pt.y);
  double S = 4.0 * a * da[0] * tau;
  for (int i = 1; i < n; ++i) S -= 2.0 * (dh[i] * xi)[i - 1];
  if (!std::isfinite(S)) throw NumericError("subprincipal_symbol: differentiation failure");

  // c = p1 - (1/2i) S = p1 + (i/2) S.
  return p1 + Complex(0.0, 0.5) * S;
}

Complex transport_coefficient(const HyperbolicOperator& op, const CovectorPoint& pt) {
  return Complex(0.0, 1.0) * subprincipal_symbol(op, pt);
}

SymbolOnRay transport_amplitude(const HyperbolicOperator& op, const Ray& ray, Complex a0,
                                const std::function<double(double)>& tube_jacobian,
                                double j_floor) {
  if (ray.s.empty()) throw ArgumentError("transport_amplitude: empty ray");
  if (!tube_jacobian) throw ArgumentError("transport_amplitude: tube jacobian required");
  const std::size_t n = ray.s.size();

  SymbolOnRay out;
  out.s = ray.s;
  out.a.resize(n);
  out.c.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.c[k] = subprincipal_symbol(op, ray.pts[k]);

  const double j0 = tube_jacobian(ray.s.front());
  if (!(j0 > 0.0))
    throw CausticError("transport_amplitude: tube jacobian not positive at start", ray.s.front());

  // Closed-form solution via the integrating factor:
  //   a(s) = a0 * exp(-int_{s0}^{s} c_t) * sqrt(J(s0)/J(s)),   c_t = i c.
  // The integral uses per-interval Simpson with cubic-Hermite midpoints, so
  // each interval contributes an O(h^5) error.
  out.a[0] = a0;
  Complex integral(0.0, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = ray.s[k + 1] - ray.s[k];
    if (!(h > 0.0)) throw ArgumentError("transport_amplitude: s samples not increasing");

    const PhaseTangent t0 = hamilton_field(op, ray.pts[k]);
    const PhaseTangent t1 = hamilton_field(op, ray.pts[k + 1]);
    CovectorPoint mid;
    mid.y = 0.5 * (ray.pts[k].y + ray.pts[k + 1].y) + (h / 8.0) * (t0.ydot - t1.ydot);
    mid.eta = 0.5 * (ray.pts[k].eta + ray.pts[k + 1].eta) + (h / 8.0) * (t0.etadot - t1.etadot);

    const Complex ct0 = Complex(0.0, 1.0) * out.c[k];
    const Complex ctm = transport_coefficient(op, mid);
    const Complex ct1 = Complex(0.0, 1.0) * out.c[k + 1];
    integral += (h / 6.0) * (ct0 + 4.0 * ctm + ct1);

    const double j = tube_jacobian(ray.s[k + 1]);
    if (!(j > j_floor * j0))
      throw CausticError("transport_amplitude: ray tube collapsed (caustic)", ray.s[k + 1]);
    out.a[k + 1] = a0 * std::exp(-integral) * std::sqrt(j0 / j);
    if (!std::isfinite(std::abs(out.a[k + 1])))
      throw NumericError("transport_amplitude: non-finite amplitude");
  }
  return out;
}

std::function<double(double)> tube_jacobian_from_rays(const Ray& center,
                                                      const std::vector<Ray>& neighbors,
                                                      const std::vector<double>& param_steps) {
  if (neighbors.empty()) throw ArgumentError("tube_jacobian_from_rays: no neighbor rays");
  if (neighbors.size() != param_steps.size())
    throw ArgumentError("tube_jacobian_from_rays: one param step per neighbor required");
  const std::size_t ns = center.s.size();
  for (const Ray& nb : neighbors) {
    if (nb.s.size() != ns)
      throw ArgumentError("tube_jacobian_from_rays: rays do not share the s grid");
    for (std::size_t k = 0; k < ns; ++k)
      if (std::abs(nb.s[k] - center.s[k]) > 1e-12)
        throw ArgumentError("tube_jacobian_from_rays: rays do not share the s grid");
  }
  const int n = static_cast<int>(center.pts.front().y.size());
  const int m = static_cast<int>(neighbors.size());

  // Column set per sample: difference quotients toward each neighbor plus the
  // flow direction ds; J = Gram volume (reduces to |det| when square).
  std::vector<double> svals = center.s;
  std::vector<double> jvals(ns);
  for (std::size_t k = 0; k < ns; ++k) {
    Mat T(n, m + 1);
    for (int j = 0; j < m; ++j) {
      if (!(std::abs(param_steps[j]) > 0.0))
        throw ArgumentError("tube_jacobian_from_rays: zero parameter step");
      T.col(j) = (neighbors[j].pts[k].y - center.pts[k].y) / param_steps[j];
    }
    // ds column from the difference of adjacent samples (uses the actual
    // traced path rather than re-evaluating coefficients).
    if (ns == 1) {
      T.col(m) = Vec::Zero(n);
    } else if (k + 1 < ns) {
      T.col(m) = (center.pts[k + 1].y - center.pts[k].y) / (center.s[k + 1] - center.s[k]);
    } else {
      T.col(m) = (center.pts[k].y - center.pts[k - 1].y) / (center.s[k] - center.s[k - 1]);
    }
    const Mat G = T.transpose() * T;
    const double d = G.determinant();
    jvals[k] = d > 0.0 ? std::sqrt(d) : 0.0;
  }

  return [svals, jvals](double s) {
    if (svals.size() == 1 || s <= svals.front()) return jvals.front();
    if (s >= svals.back()) return jvals.back();
    const auto it = std::upper_bound(svals.begin(), svals.end(), s);
    const std::size_t hi = static_cast<std::size_t>(it - svals.begin());
    const std::size_t lo = hi - 1;
    const double lam = (s - svals[lo]) / (svals[hi] - svals[lo]);
    return (1.0 - lam) * jvals[lo] + lam * jvals[hi];
  };
}

LeadingTermReport predicted_leading_term(const Scenario& sc, double m,
                                         const std::function<double(const Vec&)>& d3f_on_gamma,
                                         int n_gamma, double s_max, int s_res) {
  if (!d3f_on_gamma) throw ArgumentError("predicted_leading_term: predicate callable required");
  if (s_res < 3) throw ArgumentError("predicted_leading_term: s_res must be >= 3");
  const int n = sc.op.dim();

  LeadingTermReport rep;
  const TripleOrderReport orders = triple_output_order(m, n);
  rep.output_order = orders.output_order;
  rep.incoming_order = orders.incoming_order;
  rep.hypothesis_ok = orders.hypothesis_ok;

  if (sc.gamma_is_point) {
    rep.gamma_params = {sc.gamma_range.first};
  } else {
    rep.gamma_params.resize(n_gamma);
    const auto [lo, hi] = sc.gamma_range;
    for (int i = 0; i < n_gamma; ++i)
      rep.gamma_params[i] = lo + (hi - lo) * i / std::max(n_gamma - 1, 1);
  }

  // Flow rays are sampled on s > 0: at s = 0 the ray tube of a conormal fan
  // is degenerate by construction.
  rep.profile_s.resize(s_res);
  for (int i = 0; i < s_res; ++i)
    rep.profile_s[i] = s_max * (i + 1) / static_cast<double>(s_res);

  StepControl ctrl;
  ctrl.record_accepted = false;
  ctrl.record_s = rep.profile_s;

  const int angular = 8;
  for (double u : rep.gamma_params) {
    const Vec q = sc.gamma(u);
    rep.gamma_points.push_back(q);
    const double d3 = d3f_on_gamma(q);
    rep.d3f_values.push_back(d3);
    const bool on = std::abs(d3) > 0.0;
    rep.predicate_on.push_back(on ? 1 : 0);
    rep.any_on = rep.any_on || on;

    // trace_ray always records s = 0; drop it so the tube starts where the
    // fan is already spread out (J > 0).
    auto strip_start = [&](Ray r) {
      while (!r.s.empty() && r.s.front() < rep.profile_s.front() - 1e-12) {
        r.s.erase(r.s.begin());
        r.pts.erase(r.pts.begin());
      }
      return r;
    };

    std::vector<double> profile;
    try {
      const NullFiber fiber = conormal_null_fiber(sc.op, q, sc.fiber_normals(q), angular);
      if (fiber.points.size() >= 2) {
        const Ray center = strip_start(trace_ray(sc.op, fiber.points[0], s_max, ctrl));
        const Ray nb = strip_start(trace_ray(sc.op, fiber.points[1], s_max, ctrl));
        const auto J = tube_jacobian_from_rays(center, {nb}, {2.0 * M_PI / angular});
        const SymbolOnRay sym = transport_amplitude(sc.op, center, Complex(d3, 0.0), J);
        profile.reserve(sym.a.size());
        for (const Complex& a : sym.a) profile.push_back(std::abs(a));
      }
    } catch (const Error&) {
      profile.clear();  // tracing failed: leave this profile empty
    }
    rep.amplitude_profiles.push_back(std::move(profile));
  }
  return rep;
}

}  // namespace triplewave
