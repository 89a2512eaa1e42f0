#include <cmath>

#include "doctest.h"
#include "triplewave/scenarios.hpp"

using namespace triplewave;

namespace {

Vec make_vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// Deterministic off-surface spacetime sample points for a dim-n operator,
/// kept away from cone vertices.
std::vector<Vec> probe_points(int n) {
  std::vector<Vec> pts;
  for (int i = 0; i < 40; ++i) {
    Vec y(n);
    double phase = 0.37 * i;
    y[0] = 0.4 + 0.05 * i;
    for (int j = 1; j < n; ++j) {
      y[j] = 1.1 * std::cos(phase + 1.7 * j) + 0.3;
    }
    if (y.tail(n - 1).norm() < 0.4) y[1] += 0.9;
    pts.push_back(y);
  }
  return pts;
}

}  // namespace

TEST_CASE("scenario ids round-trip through their names") {
  for (ScenarioId id : {ScenarioId::planes_cylinder, ScenarioId::planes_cone,
                        ScenarioId::spheres, ScenarioId::fig1_2d, ScenarioId::lens}) {
    CHECK(scenario_id_from_string(to_string(id)) == id);
    Scenario sc = make_scenario(id);
    CHECK(sc.id == id);
    CHECK(sc.name == to_string(id));
  }
  CHECK_THROWS_AS(scenario_id_from_string("nonsense"), ArgumentError);
}

TEST_CASE("every declared surface solves the eikonal equation") {
  for (ScenarioId id : {ScenarioId::planes_cylinder, ScenarioId::planes_cone,
                        ScenarioId::spheres, ScenarioId::fig1_2d}) {
    Scenario sc = make_scenario(id);
    REQUIRE(sc.surfaces.size() == 3);
    auto pts = probe_points(sc.op.dim());
    for (const CharSurface& surf : sc.surfaces) {
      CHECK(eikonal_residual(sc.op, surf, pts) < 1e-10);
    }
  }
}

TEST_CASE("meeting locus lies on all three surfaces") {
  for (ScenarioId id : {ScenarioId::planes_cylinder, ScenarioId::planes_cone,
                        ScenarioId::spheres, ScenarioId::fig1_2d}) {
    Scenario sc = make_scenario(id);
    for (const Vec& q : sc.sample_gamma(7)) {
      for (const CharSurface& surf : sc.surfaces) {
        CHECK(std::abs(surf.phi(q)) < 1e-10);
      }
    }
  }
}

TEST_CASE("planes-cylinder: locus in {t = 0}, front is the circular cylinder") {
  Scenario sc = make_scenario(ScenarioId::planes_cylinder);
  REQUIRE(sc.has_closed_form);
  for (const Vec& q : sc.sample_gamma(9)) {
    CHECK(std::abs(q[0]) < 1e-12);
    CHECK(std::abs(q[1]) < 1e-12);
    CHECK(std::abs(q[2]) < 1e-12);
  }
  // Front: t = sqrt(x1^2 + x2^2), any x3.
  Vec on = make_vec({1.0, std::sqrt(0.5), std::sqrt(0.5), 0.8});
  CHECK(closed_form_distance(sc, {on}) < 1e-12);
  Vec inside = make_vec({1.0, 0.5, 0.0, 0.0});
  CHECK(closed_form_distance(sc, {inside}) > 0.1);
}

TEST_CASE("planes-cone: time varies along the meeting locus") {
  Scenario sc = make_scenario(ScenarioId::planes_cone);
  REQUIRE(sc.has_closed_form);
  auto gam = sc.sample_gamma(9);
  double t_min = 1e30, t_max = -1e30;
  for (const Vec& q : gam) {
    t_min = std::min(t_min, q[0]);
    t_max = std::max(t_max, q[0]);
  }
  CHECK(t_max - t_min > 0.5);  // not contained in any level set of t
}

TEST_CASE("spheres: locus hyperbola and first interaction time") {
  for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{1.3, 0.7}}) {
    ScenarioParams params;
    params.a = a;
    params.b = b;
    Scenario sc = make_scenario(ScenarioId::spheres, params);
    auto gam = sc.sample_gamma(11);
    for (const Vec& q : gam) {
      CHECK(q[1] == doctest::Approx(a).epsilon(1e-12));
      CHECK(q[2] == doctest::Approx(b).epsilon(1e-12));
      CHECK(q[0] == doctest::Approx(std::sqrt(q[3] * q[3] + a * a + b * b)).epsilon(1e-12));
      for (const CharSurface& surf : sc.surfaces) CHECK(std::abs(surf.phi(q)) < 1e-10);
    }
    // First interaction time: t at x3 = 0.
    Vec q0 = sc.gamma(0.0);
    CHECK(std::abs(q0[3]) < 1e-12);
    CHECK(q0[0] == doctest::Approx(std::sqrt(a * a + b * b)).epsilon(1e-12));
  }
}

TEST_CASE("spheres: locus is spacelike (time transversal)") {
  Scenario sc = make_scenario(ScenarioId::spheres);
  for (double u : {-1.5, -0.4, 0.0, 0.7, 1.8}) {
    double du = 1e-6;
    Vec tangent = (sc.gamma(u + du) - sc.gamma(u - du)) / (2.0 * du);
    double dt = std::abs(tangent[0]);
    double dx = tangent.tail(3).norm();
    CHECK(dt < dx - 1e-3);
  }
}

TEST_CASE("fig1-2d: point locus at the spacetime origin with coordinate fiber") {
  Scenario sc = make_scenario(ScenarioId::fig1_2d);
  CHECK(sc.gamma_is_point);
  auto gam = sc.sample_gamma(5);
  REQUIRE(gam.size() == 1);
  CHECK(gam[0].norm() < 1e-14);
  Mat fn = sc.fiber_normals(gam[0]);
  REQUIRE(fn.rows() == 3);
  REQUIRE(fn.cols() == 3);
  CHECK((fn - Mat::Identity(3, 3)).norm() < 1e-14);
  // Closed form: the forward cone t = |x|.
  REQUIRE(sc.has_closed_form);
  CHECK(closed_form_distance(sc, {make_vec({1.0, 0.6, 0.8})}) < 1e-12);
}

TEST_CASE("surface scenarios: fiber normals are the surface conormals") {
  for (ScenarioId id :
       {ScenarioId::planes_cylinder, ScenarioId::planes_cone, ScenarioId::spheres}) {
    Scenario sc = make_scenario(id);
    Vec q = sc.sample_gamma(3)[1];
    Mat fn = sc.fiber_normals(q);
    REQUIRE(fn.rows() == 3);
    REQUIRE(fn.cols() == sc.op.dim());
    for (int j = 0; j < 3; ++j) {
      Vec g = sc.surfaces[j].grad_phi(q);
      Vec row = fn.row(j).transpose();
      double cosang = std::abs(row.dot(g)) / (row.norm() * g.norm());
      CHECK(cosang == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("closed-form gradient matches finite differences") {
  for (ScenarioId id : {ScenarioId::planes_cylinder, ScenarioId::planes_cone,
                        ScenarioId::spheres, ScenarioId::fig1_2d}) {
    Scenario sc = make_scenario(id);
    int n = sc.op.dim();
    Vec y(n);
    y[0] = 1.4;
    for (int j = 1; j < n; ++j) y[j] = 0.3 + 0.25 * j;
    Vec g = sc.closed_form_Q_grad(y);
    for (int i = 0; i < n; ++i) {
      Vec yp = y, ym = y;
      double dh = 1e-6;
      yp[i] += dh;
      ym[i] -= dh;
      double fd = (sc.closed_form_Q(yp) - sc.closed_form_Q(ym)) / (2.0 * dh);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("closed_form_distance: normal displacement by 0.1 reads back as 0.1") {
  Scenario sc = make_scenario(ScenarioId::planes_cylinder);
  Vec y0 = make_vec({1.0, 1.0, 0.0, 0.5});  // on the front
  REQUIRE(std::abs(sc.closed_form_Q(y0)) < 1e-14);
  Vec n_hat = sc.closed_form_Q_grad(y0).normalized();
  Vec y = y0 + 0.1 * n_hat;
  CHECK(closed_form_distance(sc, {y}) == doctest::Approx(0.1).epsilon(1e-3));
}

TEST_CASE("closed_form_distance: empty set and missing closed forms") {
  Scenario sc = make_scenario(ScenarioId::planes_cylinder);
  CHECK(closed_form_distance(sc, {}) == 0.0);
  Scenario lens = make_scenario(ScenarioId::lens);
  CHECK(!lens.has_closed_form);
  CHECK_THROWS_AS(closed_form_distance(lens, {make_vec({0, 0, 0})}), UnsupportedError);
}

TEST_CASE("lens: variable sound speed peaks at the lens center") {
  Scenario sc = make_scenario(ScenarioId::lens);
  CHECK(sc.gamma_is_point);
  CHECK(sc.op.dim() == 3);
  Vec origin = make_vec({0, 0, 0});
  Vec far = make_vec({0, 5, 5});
  double c0 = sc.op.max_speed({origin});
  double c_far = sc.op.max_speed({far});
  CHECK(c0 == doctest::Approx(1.3).epsilon(1e-10));
  CHECK(c_far == doctest::Approx(1.0).epsilon(1e-6));
  // Default source sits 4 units before the lens at t = 0.
  CHECK(sc.params.lens_source[0] == 0.0);
  CHECK(sc.params.lens_source.tail(2).norm() == doctest::Approx(4.0).epsilon(1e-12));
}
