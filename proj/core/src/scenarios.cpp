#include "triplewave/scenarios.hpp"

#include <cmath>

namespace triplewave {

std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::planes_cylinder: return "planes-cylinder";
    case ScenarioId::planes_cone: return "planes-cone";
    case ScenarioId::spheres: return "spheres";
    case ScenarioId::fig1_2d: return "fig1-2d";
    case ScenarioId::lens: return "lens";
  }
  throw ArgumentError("to_string: unknown scenario id");
}

ScenarioId scenario_id_from_string(const std::string& name) {
  if (name == "planes-cylinder") return ScenarioId::planes_cylinder;
  if (name == "planes-cone") return ScenarioId::planes_cone;
  if (name == "spheres") return ScenarioId::spheres;
  if (name == "fig1-2d") return ScenarioId::fig1_2d;
  if (name == "lens") return ScenarioId::lens;
  throw ArgumentError("unknown scenario id: " + name);
}

std::vector<Vec> Scenario::sample_gamma(int count) const {
  if (count < 1) throw ArgumentError("sample_gamma: count must be >= 1");
  if (gamma_is_point) return {gamma(gamma_range.first)};
  std::vector<Vec> out;
  out.reserve(count);
  const auto [lo, hi] = gamma_range;
  if (count == 1) {
    out.push_back(gamma(0.5 * (lo + hi)));
    return out;
  }
  for (int i = 0; i < count; ++i)
    out.push_back(gamma(lo + (hi - lo) * i / (count - 1)));
  return out;
}

Mat Scenario::fiber_normals(const Vec& q) const {
  const int n = op.dim();
  // A point locus is conormal to everything: the fiber is all of the
  // cotangent space, spanned by the coordinate covectors regardless of how
  // many surfaces pass through the point.
  if (gamma_is_point && n == 3) return Mat::Identity(3, 3);
  if (surfaces.size() == 3) {
    Mat N(3, n);
    for (int j = 0; j < 3; ++j) N.row(j) = surfaces[j].grad_phi(q).transpose();
    return N;
  }
  if (n == 3) return Mat::Identity(3, 3);
  throw UnsupportedError("fiber_normals: no surface normals available for this scenario");
}

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

Scenario make_planes_cylinder(const ScenarioParams& params) {
  Scenario sc;
  sc.id = ScenarioId::planes_cylinder;
  sc.name = to_string(sc.id);
  sc.params = params;
  sc.op = HyperbolicOperator::minkowski(4);

  Vec w1 = vec3(1, 0, 0), w2 = vec3(0, 1, 0);
  const double r2 = 1.0 / std::sqrt(2.0);
  Vec w3 = vec3(r2, r2, 0);
  sc.surfaces.push_back(CharSurface::plane(w1, 0.0, "sigma1"));
  sc.surfaces.push_back(CharSurface::plane(w2, 0.0, "sigma2"));
  sc.surfaces.push_back(CharSurface::plane(w3, 0.0, "sigma3"));

  sc.has_closed_form = true;
  sc.closed_form_Q = [](const Vec& y) {
    return y[0] - std::hypot(y[1], y[2]);
  };
  sc.closed_form_Q_grad = [](const Vec& y) {
    const double r = std::hypot(y[1], y[2]);
    Vec g = Vec::Zero(4);
    g[0] = 1.0;
    if (r > 1e-300) {
      g[1] = -y[1] / r;
      g[2] = -y[2] / r;
    }
    return g;
  };

  sc.gamma = [](double u) {
    Vec q = Vec::Zero(4);
    q[3] = u;
    return q;
  };
  sc.gamma_range = {-1.0, 1.0};
  return sc;
}

Scenario make_planes_cone(const ScenarioParams& params) {
  Scenario sc;
  sc.id = ScenarioId::planes_cone;
  sc.name = to_string(sc.id);
  sc.params = params;
  sc.op = HyperbolicOperator::minkowski(4);

  sc.surfaces.push_back(CharSurface::plane(vec3(1, 0, 0), 0.0, "sigma1"));
  sc.surfaces.push_back(CharSurface::plane(vec3(0, 1, 0), 0.0, "sigma2"));
  sc.surfaces.push_back(CharSurface::plane(vec3(0, 0, 1), 0.0, "sigma3"));

  sc.has_closed_form = true;
  sc.closed_form_Q = [](const Vec& y) {
    const double t = y[0], x1 = y[1], x2 = y[2], x3 = y[3];
    const double A = 3 * t - x1 - x2 - x3;
    const double B1 = t + x1 - x2 - x3;
    const double B2 = t + x2 - x1 - x3;
    const double B3 = t + x3 - x1 - x2;
    return A * A - B1 * B1 - B2 * B2 - B3 * B3;
  };
  sc.closed_form_Q_grad = [](const Vec& y) {
    const double t = y[0], x1 = y[1], x2 = y[2], x3 = y[3];
    const double A = 3 * t - x1 - x2 - x3;
    Vec g(4);
    g[0] = 4 * A;
    g[1] = -2 * A + 2 * (t - 3 * x1 + x2 + x3);
    g[2] = -2 * A + 2 * (t - 3 * x2 + x1 + x3);
    g[3] = -2 * A + 2 * (t - 3 * x3 + x1 + x2);
    return g;
  };

  sc.gamma = [](double u) {
    Vec q(4);
    q << u, u, u, u;
    return q;
  };
  sc.gamma_range = {-1.0, 1.0};
  return sc;
}

Scenario make_spheres(const ScenarioParams& params) {
  if (!(params.a > 0.0) || !(params.b > 0.0))
    throw ArgumentError("spheres scenario requires a > 0 and b > 0");
  Scenario sc;
  sc.id = ScenarioId::spheres;
  sc.name = to_string(sc.id);
  sc.params = params;
  sc.op = HyperbolicOperator::minkowski(4);

  const double a = params.a, b = params.b;
  sc.surfaces.push_back(CharSurface::cone(vec3(0, 0, 0), 0.0, "sigma1"));
  sc.surfaces.push_back(CharSurface::cone(vec3(2 * a, 0, 0), 0.0, "sigma2"));
  sc.surfaces.push_back(CharSurface::cone(vec3(0, 2 * b, 0), 0.0, "sigma3"));

  const double rab = std::sqrt(a * a + b * b);
  sc.has_closed_form = true;
  sc.closed_form_Q = [a, b, rab](const Vec& y) {
    const double t = y[0], x1 = y[1], x2 = y[2], x3 = y[3];
    const double rho2 = t * t - x3 * x3;
    const double rho = std::sqrt(std::max(rho2, 0.0));
    const double D = rho - rab;
    return (x1 - a) * (x1 - a) + (x2 - b) * (x2 - b) - D * D;
  };
  sc.closed_form_Q_grad = [a, b, rab](const Vec& y) {
    const double t = y[0], x1 = y[1], x2 = y[2], x3 = y[3];
    const double rho = std::sqrt(std::max(t * t - x3 * x3, 1e-300));
    const double D = rho - rab;
    Vec g(4);
    g[0] = -2.0 * D * (t / rho);
    g[1] = 2.0 * (x1 - a);
    g[2] = 2.0 * (x2 - b);
    g[3] = 2.0 * D * (x3 / rho);
    return g;
  };

  sc.gamma = [a, b](double u) {
    Vec q(4);
    q << std::sqrt(u * u + a * a + b * b), a, b, u;
    return q;
  };
  sc.gamma_range = {-2.0, 2.0};
  return sc;
}

Scenario make_fig1_2d(const ScenarioParams& params) {
  Scenario sc;
  sc.id = ScenarioId::fig1_2d;
  sc.name = to_string(sc.id);
  sc.params = params;
  sc.op = HyperbolicOperator::minkowski(3);

  for (int j = 0; j < 3; ++j) {
    const double th = 2.0 * M_PI * j / 3.0;
    Vec w(2);
    w << std::cos(th), std::sin(th);
    sc.surfaces.push_back(CharSurface::plane(w, 0.0, "sigma" + std::to_string(j + 1)));
  }

  sc.has_closed_form = true;
  sc.closed_form_Q = [](const Vec& y) { return y[0] - std::hypot(y[1], y[2]); };
  sc.closed_form_Q_grad = [](const Vec& y) {
    const double r = std::hypot(y[1], y[2]);
    Vec g = Vec::Zero(3);
    g[0] = 1.0;
    if (r > 1e-300) {
      g[1] = -y[1] / r;
      g[2] = -y[2] / r;
    }
    return g;
  };

  sc.gamma = [](double) { return Vec::Zero(3); };
  sc.gamma_range = {0.0, 0.0};
  sc.gamma_is_point = true;
  return sc;
}

Scenario make_lens(const ScenarioParams& params) {
  if (!(params.lens_amp > -0.99))
    throw ArgumentError("lens scenario requires amplitude > -0.99 (positive speed)");
  Scenario sc;
  sc.id = ScenarioId::lens;
  sc.name = to_string(sc.id);
  sc.params = params;
  if (sc.params.lens_source.size() == 0) sc.params.lens_source = vec3(0.0, -4.0, 0.0);
  if (sc.params.lens_source.size() != 3)
    throw ArgumentError("lens source must be a spacetime point (t, x1, x2)");

  const double amp = params.lens_amp;
  HyperbolicOperator::Coefficients c;
  c.dim = 3;
  c.alpha = [](const Vec&) { return 1.0; };
  c.alpha_grad = [](const Vec&) { return Vec::Zero(3); };
  auto speed = [amp](double x1, double x2) {
    return 1.0 + amp * std::exp(-(x1 * x1 + x2 * x2));
  };
  c.metric = [speed](const Vec& y) {
    const double cs = speed(y[1], y[2]);
    return Mat::Identity(2, 2) * (cs * cs);
  };
  c.metric_grad = [speed, amp](const Vec& y) {
    const double e = amp * std::exp(-(y[1] * y[1] + y[2] * y[2]));
    const double cs = 1.0 + e;
    std::vector<Mat> g(3, Mat::Zero(2, 2));
    g[1] = Mat::Identity(2, 2) * (2.0 * cs * (-2.0 * y[1] * e));
    g[2] = Mat::Identity(2, 2) * (2.0 * cs * (-2.0 * y[2] * e));
    return g;
  };
  sc.op = HyperbolicOperator(std::move(c));

  sc.has_closed_form = false;
  const Vec src = sc.params.lens_source;
  sc.gamma = [src](double) { return src; };
  sc.gamma_range = {0.0, 0.0};
  sc.gamma_is_point = true;
  return sc;
}

}  // namespace

Scenario make_scenario(ScenarioId id, const ScenarioParams& params) {
  switch (id) {
    case ScenarioId::planes_cylinder: return make_planes_cylinder(params);
    case ScenarioId::planes_cone: return make_planes_cone(params);
    case ScenarioId::spheres: return make_spheres(params);
    case ScenarioId::fig1_2d: return make_fig1_2d(params);
    case ScenarioId::lens: return make_lens(params);
  }
  throw ArgumentError("make_scenario: unknown id");
}

Scenario make_scenario(const std::string& id, const ScenarioParams& params) {
  return make_scenario(scenario_id_from_string(id), params);
}

double closed_form_distance(const Scenario& sc, const std::vector<Vec>& points) {
  if (!sc.has_closed_form)
    throw UnsupportedError("closed_form_distance: scenario has no closed-form surface");
  double worst = 0.0;
  for (const Vec& y : points) {
    const double g = sc.closed_form_Q(y);
    const double gn = sc.closed_form_Q_grad(y).norm();
    if (gn < 1e-300) throw NumericError("closed_form_distance: vanishing surface gradient");
    worst = std::max(worst, std::abs(g) / gn);
  }
  return worst;
}

}  // namespace triplewave
