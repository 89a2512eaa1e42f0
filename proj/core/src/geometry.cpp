#include "triplewave/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace triplewave {

namespace {

const double kHFdBase = std::cbrt(std::numeric_limits<double>::epsilon());

double fd_step(double coord) { return kHFdBase * std::max(1.0, std::abs(coord)); }

void require_finite(const Vec& v, const char* where) {
  if (!v.allFinite()) throw NumericError(std::string(where) + ": non-finite value");
}

}  // namespace

// ---------------------------------------------------------------------------
// HyperbolicOperator
// ---------------------------------------------------------------------------

HyperbolicOperator::HyperbolicOperator(Coefficients c) : coef_(std::move(c)) {
  if (coef_.dim < 2) throw ArgumentError("HyperbolicOperator: dim must be >= 2");
  if (!coef_.alpha || !coef_.metric)
    throw ArgumentError("HyperbolicOperator: alpha and metric callables are required");
}

HyperbolicOperator HyperbolicOperator::minkowski(int dim) {
  Coefficients c;
  c.dim = dim;
  const int sd = dim - 1;
  c.alpha = [](const Vec&) { return 1.0; };
  c.metric = [sd](const Vec&) { return Mat::Identity(sd, sd); };
  c.alpha_grad = [dim](const Vec&) { return Vec::Zero(dim); };
  c.metric_grad = [dim, sd](const Vec&) {
    return std::vector<Mat>(dim, Mat::Zero(sd, sd));
  };
  return HyperbolicOperator(std::move(c));
}

HyperbolicOperator HyperbolicOperator::isotropic(int dim, std::function<double(const Vec&)> speed) {
  if (!speed) throw ArgumentError("isotropic: speed callable required");
  Coefficients c;
  c.dim = dim;
  const int sd = dim - 1;
  c.alpha = [](const Vec&) { return 1.0; };
  c.metric = [sd, speed](const Vec& y) {
    const double cs = speed(y.tail(sd));
    return Mat::Identity(sd, sd) * (cs * cs);
  };
  c.alpha_grad = [dim](const Vec&) { return Vec::Zero(dim); };
  return HyperbolicOperator(std::move(c));
}

HyperbolicOperator HyperbolicOperator::damped_minkowski(int dim, double beta) {
  auto op = minkowski(dim);
  Coefficients c = op.coef_;
  c.first_order = [dim, beta](const Vec&) {
    Vec b = Vec::Zero(dim);
    b[0] = beta;
    return b;
  };
  return HyperbolicOperator(std::move(c));
}

double HyperbolicOperator::alpha(const Vec& y) const {
  require_in_domain(y);
  const double a = coef_.alpha(y);
  if (!(a > 0.0)) throw DomainError("alpha: non-positive value at queried point");
  return a;
}

Mat HyperbolicOperator::metric(const Vec& y) const {
  require_in_domain(y);
  return coef_.metric(y);
}

Vec HyperbolicOperator::first_order(const Vec& y) const {
  if (!coef_.first_order) return Vec::Zero(coef_.dim);
  return coef_.first_order(y);
}

Vec HyperbolicOperator::alpha_grad(const Vec& y) const {
  if (coef_.alpha_grad) return coef_.alpha_grad(y);
  const int n = coef_.dim;
  Vec g(n);
  Vec yp = y, ym = y;
  for (int i = 0; i < n; ++i) {
    const double h = fd_step(y[i]);
    yp[i] = y[i] + h;
    ym[i] = y[i] - h;
    g[i] = (coef_.alpha(yp) - coef_.alpha(ym)) / (2.0 * h);
    yp[i] = y[i];
    ym[i] = y[i];
  }
  if (!g.allFinite()) throw NumericError("alpha_grad: finite-difference failure");
  return g;
}

std::vector<Mat> HyperbolicOperator::metric_grad(const Vec& y) const {
  if (coef_.metric_grad) return coef_.metric_grad(y);
  const int n = coef_.dim;
  std::vector<Mat> g(n);
  Vec yp = y, ym = y;
  for (int i = 0; i < n; ++i) {
    const double h = fd_step(y[i]);
    yp[i] = y[i] + h;
    ym[i] = y[i] - h;
    g[i] = (coef_.metric(yp) - coef_.metric(ym)) / (2.0 * h);
    if (!g[i].allFinite()) throw NumericError("metric_grad: finite-difference failure");
    yp[i] = y[i];
    ym[i] = y[i];
  }
  return g;
}

void HyperbolicOperator::require_in_domain(const Vec& y) const {
  if (y.size() != coef_.dim)
    throw ArgumentError("point dimension does not match operator dimension");
  if (!coef_.domain_box) return;
  const auto& [lo, hi] = *coef_.domain_box;
  for (int i = 0; i < coef_.dim; ++i) {
    if (y[i] < lo[i] || y[i] > hi[i])
      throw DomainError("point outside the operator's coefficient domain");
  }
}

double HyperbolicOperator::max_speed(const std::vector<Vec>& probes) const {
  if (probes.empty()) throw ArgumentError("max_speed: empty probe set");
  double cmax = 0.0;
  for (const Vec& y : probes) {
    Eigen::SelfAdjointEigenSolver<Mat> es(metric(y));
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmax > 0.0)) throw DomainError("max_speed: metric not positive definite at probe");
    cmax = std::max(cmax, std::sqrt(lmax) / alpha(y));
  }
  return cmax;
}

// ---------------------------------------------------------------------------
// Symbol and Hamilton field
// ---------------------------------------------------------------------------

double principal_symbol(const HyperbolicOperator& op, const CovectorPoint& pt) {
  const int n = op.dim();
  if (pt.y.size() != n || pt.eta.size() != n)
    throw ArgumentError("principal_symbol: dimension mismatch");
  const double a = op.alpha(pt.y);
  const Mat h = op.metric(pt.y);
  const double tau = pt.eta[0];
  const Vec xi = pt.eta.tail(n - 1);
  return a * a * tau * tau - xi.dot(h * xi);
}

PhaseTangent hamilton_field(const HyperbolicOperator& op, const CovectorPoint& pt) {
  const int n = op.dim();
  if (pt.y.size() != n || pt.eta.size() != n)
    throw ArgumentError("hamilton_field: dimension mismatch");
  const double a = op.alpha(pt.y);
  const Mat h = op.metric(pt.y);
  const double tau = pt.eta[0];
  const Vec xi = pt.eta.tail(n - 1);

  PhaseTangent out;
  out.ydot = Vec(n);
  out.ydot[0] = 2.0 * a * a * tau;
  out.ydot.tail(n - 1) = -2.0 * (h * xi);

  const Vec da = op.alpha_grad(pt.y);
  const std::vector<Mat> dh = op.metric_grad(pt.y);
  out.etadot = Vec(n);
  for (int i = 0; i < n; ++i) {
    const double dp_dyi = 2.0 * a * da[i] * tau * tau - xi.dot(dh[i] * xi);
    out.etadot[i] = -dp_dyi;
  }
  require_finite(out.ydot, "hamilton_field");
  require_finite(out.etadot, "hamilton_field");
  return out;
}

// ---------------------------------------------------------------------------
// CharSurface
// ---------------------------------------------------------------------------

CharSurface::CharSurface(std::function<double(const Vec&)> phi,
                         std::function<Vec(const Vec&)> grad_phi, std::string label)
    : phi_(std::move(phi)), grad_phi_(std::move(grad_phi)), label_(std::move(label)) {
  if (!phi_) throw ArgumentError("CharSurface: level function required");
}

CharSurface CharSurface::plane(const Vec& omega_spatial, double shift, std::string label) {
  const Vec omega = omega_spatial;
  const double sft = shift;
  auto phi = [omega, sft](const Vec& y) {
    return y[0] - omega.dot(y.tail(y.size() - 1)) + sft;
  };
  auto grad = [omega](const Vec& y) {
    Vec g(y.size());
    g[0] = 1.0;
    g.tail(y.size() - 1) = -omega;
    return g;
  };
  CharSurface s(phi, grad, std::move(label));
  s.form_ = Form::plane;
  s.omega_ = omega;
  s.shift_ = sft;
  return s;
}

CharSurface CharSurface::cone(const Vec& center_spatial, double shift, std::string label) {
  const Vec c = center_spatial;
  const double sft = shift;
  auto phi = [c, sft](const Vec& y) {
    return y[0] - (y.tail(y.size() - 1) - c).norm() + sft;
  };
  auto grad = [c](const Vec& y) {
    const Vec r = y.tail(y.size() - 1) - c;
    const double rn = r.norm();
    if (rn < 1e-300) throw DomainError("cone gradient undefined at the vertex");
    Vec g(y.size());
    g[0] = 1.0;
    g.tail(y.size() - 1) = -r / rn;
    return g;
  };
  CharSurface s(phi, grad, std::move(label));
  s.form_ = Form::cone;
  s.center_ = c;
  s.shift_ = sft;
  return s;
}

Vec CharSurface::grad_phi(const Vec& y) const {
  if (grad_phi_) return grad_phi_(y);
  const auto n = y.size();
  Vec g(n);
  Vec yp = y, ym = y;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = fd_step(y[i]);
    yp[i] = y[i] + h;
    ym[i] = y[i] - h;
    g[i] = (phi_(yp) - phi_(ym)) / (2.0 * h);
    yp[i] = y[i];
    ym[i] = y[i];
  }
  if (!g.allFinite()) throw NumericError("grad_phi: finite-difference failure");
  return g;
}

double eikonal_residual(const HyperbolicOperator& op, const CharSurface& surf,
                        const std::vector<Vec>& sample_pts) {
  if (sample_pts.empty()) throw ArgumentError("eikonal_residual: empty sample set");
  double worst = 0.0;
  for (const Vec& y : sample_pts) {
    const Vec g = surf.grad_phi(y);
    worst = std::max(worst, std::abs(principal_symbol(op, CovectorPoint{y, g})));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Ray tracing (Dormand-Prince 5(4), adaptive)
// ---------------------------------------------------------------------------

namespace {

struct Dp45 {
  // Butcher tableau of the Dormand-Prince 5(4) pair.
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

}  // namespace

Ray trace_ray(const HyperbolicOperator& op, const CovectorPoint& start, double s_max,
              const StepControl& ctrl) {
  const int n = op.dim();
  if (start.y.size() != n || start.eta.size() != n)
    throw ArgumentError("trace_ray: start dimension mismatch");
  const double eta2 = start.eta.squaredNorm();
  if (!(eta2 > 0.0)) throw ArgumentError("trace_ray: zero covector");
  const double p0 = principal_symbol(op, start);
  if (std::abs(p0) > kTolNull * eta2)
    throw ArgumentError("trace_ray: start covector is not null to tolerance");

  const double dir = (s_max < 0.0) ? -1.0 : 1.0;
  const double S = std::abs(s_max);

  // Mandatory sample parameters (unsigned), always ending at S.
  std::vector<double> mandatory;
  for (double s : ctrl.record_s) {
    const double u = dir * s;
    if (u < -1e-15 || u > S * (1.0 + 1e-12))
      throw ArgumentError("trace_ray: record_s value outside [0, s_max]");
    mandatory.push_back(std::clamp(u, 0.0, S));
  }
  mandatory.push_back(S);
  std::sort(mandatory.begin(), mandatory.end());
  mandatory.erase(std::unique(mandatory.begin(), mandatory.end(),
                              [](double a, double b) { return std::abs(a - b) <= 1e-15; }),
                  mandatory.end());

  Ray ray;
  Vec z(2 * n);
  z.head(n) = start.y;
  z.tail(n) = start.eta;
  auto push_sample = [&](double u) {
    if (!ray.s.empty() && std::abs(ray.s.back() - dir * u) <= 1e-15) return;
    ray.s.push_back(dir * u);
    ray.pts.push_back(CovectorPoint{z.head(n), z.tail(n)});
    const double p = principal_symbol(op, ray.pts.back());
    ray.stats.max_null_drift = std::max(ray.stats.max_null_drift, std::abs(p - p0));
  };
  push_sample(0.0);
  if (S == 0.0) return ray;

  auto flow = [&](const Vec& state) -> Vec {
    const CovectorPoint pt{state.head(n), state.tail(n)};
    const PhaseTangent ht = hamilton_field(op, pt);
    Vec dz(2 * n);
    dz.head(n) = dir * ht.ydot;
    dz.tail(n) = dir * ht.etadot;
    return dz;
  };

  double u = 0.0;
  double h = std::min(ctrl.h_init, S);
  std::size_t im = 0;
  while (std::abs(mandatory[im]) <= 1e-15) ++im;  // skip u = 0 if present
  long steps = 0;
  Vec k1 = flow(z), k2, k3, k4, k5, k6, k7;

  while (u < S - 1e-15) {
    if (++steps > ctrl.max_steps)
      throw IntegrationError("trace_ray: step limit exceeded", dir * u);
    const double target = mandatory[im];
    bool clamped = false;
    double hs = std::min(h, ctrl.h_max);
    if (u + hs >= target - 1e-15) {
      hs = target - u;
      clamped = true;
    }

    using D = Dp45;
    k2 = flow(z + hs * (D::a21 * k1));
    k3 = flow(z + hs * (D::a31 * k1 + D::a32 * k2));
    k4 = flow(z + hs * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
    k5 = flow(z + hs * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
    k6 = flow(z + hs * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 + D::a65 * k5));
    const Vec znew =
        z + hs * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
    k7 = flow(znew);
    const Vec err =
        hs * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);

    double acc = 0.0;
    for (int i = 0; i < 2 * n; ++i) {
      const double sc = ctrl.atol + ctrl.rtol * std::max(std::abs(z[i]), std::abs(znew[i]));
      const double q = err[i] / sc;
      acc += q * q;
    }
    const double errnorm = std::sqrt(acc / (2 * n));

    if (!std::isfinite(errnorm) || !znew.allFinite())
      throw IntegrationError("trace_ray: non-finite state (blow-up)", dir * u);

    if (errnorm <= 1.0) {
      u += hs;
      z = znew;
      k1 = k7;  // first-same-as-last
      ++ray.stats.n_accepted;
      if (z.lpNorm<Eigen::Infinity>() > 1e12)
        throw IntegrationError("trace_ray: solution blow-up", dir * u);
      const bool at_target = clamped || std::abs(u - target) <= 1e-15;
      if (at_target) {
        u = target;
        push_sample(u);
        ++im;
      } else if (ctrl.record_accepted) {
        push_sample(u);
      }
      const double fac =
          (errnorm == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(errnorm, -0.2), 0.2, 5.0);
      h = std::clamp(hs * fac, ctrl.h_min, ctrl.h_max);
    } else {
      ++ray.stats.n_rejected;
      h = hs * std::clamp(0.9 * std::pow(errnorm, -0.2), 0.1, 0.9);
      if (h < ctrl.h_min)
        throw IntegrationError("trace_ray: step size underflow", dir * u);
      // k1 is still valid: z was not advanced.
    }
  }

  if (ray.stats.max_null_drift > kTolRay * (1.0 + eta2))
    throw IntegrationError("trace_ray: null conservation violated beyond tolerance", dir * u);
  return ray;
}

// ---------------------------------------------------------------------------
// Triple intersection
// ---------------------------------------------------------------------------

TripleIntersection triple_intersection(const std::array<CharSurface, 3>& surfs, const Vec& lo,
                                       const Vec& hi, int grid_res, double tol,
                                       double tol_transversal) {
  const int n = static_cast<int>(lo.size());
  if (hi.size() != n || n < 3) throw ArgumentError("triple_intersection: bad box");
  if (grid_res < 2) throw ArgumentError("triple_intersection: grid_res must be >= 2");
  for (int i = 0; i < n; ++i)
    if (!(hi[i] > lo[i])) throw ArgumentError("triple_intersection: empty box");

  const int npts = grid_res + 1;
  Vec step(n);
  for (int i = 0; i < n; ++i) step[i] = (hi[i] - lo[i]) / grid_res;

  // Corner values of each level function on the lattice.
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(npts);
  std::array<std::vector<double>, 3> vals;
  for (auto& v : vals) v.resize(total);
  {
    std::vector<int> idx(n, 0);
    Vec y(n);
    for (std::size_t flat = 0; flat < total; ++flat) {
      for (int i = 0; i < n; ++i) y[i] = lo[i] + step[i] * idx[i];
      for (int j = 0; j < 3; ++j) vals[j][flat] = surfs[j].phi(y);
      for (int i = n - 1; i >= 0; --i) {
        if (++idx[i] < npts) break;
        idx[i] = 0;
      }
    }
  }
  auto corner_flat = [&](const std::vector<int>& cell, int mask) {
    std::size_t flat = 0;
    for (int i = 0; i < n; ++i) {
      const int c = cell[i] + ((mask >> i) & 1);
      flat = flat * npts + c;
    }
    return flat;
  };

  TripleIntersection out;
  const double diag = step.norm();
  const double dedup_r = 1e-6 * (hi - lo).norm();

  std::vector<int> cell(n, 0);
  std::size_t ncells = 1;
  for (int i = 0; i < n; ++i) ncells *= static_cast<std::size_t>(grid_res);
  const int ncorner = 1 << n;

  for (std::size_t cflat = 0; cflat < ncells; ++cflat) {
    bool candidate = true;
    for (int j = 0; j < 3 && candidate; ++j) {
      double vmin = std::numeric_limits<double>::infinity();
      double vmax = -vmin;
      for (int m = 0; m < ncorner; ++m) {
        const double v = vals[j][corner_flat(cell, m)];
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
      // Keep the cell if the function straddles zero or comes close relative
      // to its own variation across the cell.
      if (!(vmin <= 0.0 && vmax >= 0.0) &&
          std::min(std::abs(vmin), std::abs(vmax)) > (vmax - vmin))
        candidate = false;
    }

    if (candidate) {
      Vec y(n);
      for (int i = 0; i < n; ++i) y[i] = lo[i] + step[i] * (cell[i] + 0.5);

      // Gauss-Newton on F = (phi_1, phi_2, phi_3) with the minimum-norm step.
      bool ok = false;
      for (int it = 0; it < 60; ++it) {
        Eigen::Vector3d F;
        Mat J(3, n);
        for (int j = 0; j < 3; ++j) {
          F[j] = surfs[j].phi(y);
          J.row(j) = surfs[j].grad_phi(y).transpose();
        }
        if (F.cwiseAbs().maxCoeff() <= tol) {
          ok = true;
          break;
        }
        const Mat JJt = J * J.transpose();
        Eigen::LDLT<Mat> ldlt(JJt);
        if (ldlt.info() != Eigen::Success) break;
        const Vec dy = J.transpose() * ldlt.solve(F);
        if (!dy.allFinite() || dy.norm() > 10.0 * diag + 1.0) break;
        y -= dy;
      }
      if (ok) {
        bool inside = true;
        for (int i = 0; i < n; ++i)
          if (y[i] < lo[i] - 0.5 * step[i] || y[i] > hi[i] + 0.5 * step[i]) inside = false;
        bool dup = false;
        if (inside) {
          for (const Vec& q : out.points)
            if ((q - y).norm() <= dedup_r) {
              dup = true;
              break;
            }
        }
        if (inside && !dup) {
          Mat N(3, n);
          for (int j = 0; j < 3; ++j) {
            Vec g = surfs[j].grad_phi(y);
            const double gn = g.norm();
            if (gn < 1e-300) throw NumericError("triple_intersection: degenerate level set");
            N.row(j) = (g / gn).transpose();
          }
          Eigen::JacobiSVD<Mat> svd(N);
          const double smin = svd.singularValues().minCoeff();
          const bool trans = smin >= tol_transversal;
          out.points.push_back(y);
          out.normals.push_back(N);
          out.min_singular_value.push_back(smin);
          out.transversal.push_back(trans ? 1 : 0);
          if (!trans) out.all_transversal = false;
        }
      }
    }

    for (int i = n - 1; i >= 0; --i) {
      if (++cell[i] < grid_res) break;
      cell[i] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Null fiber of a conormal bundle
// ---------------------------------------------------------------------------

NullFiber conormal_null_fiber(const HyperbolicOperator& op, const Vec& q, const Mat& normals,
                              int angular_res) {
  const int n = op.dim();
  if (normals.rows() != 3 || normals.cols() != n)
    throw ArgumentError("conormal_null_fiber: normals must be a 3 x dim matrix");
  if (angular_res < 3) throw ArgumentError("conormal_null_fiber: angular_res must be >= 3");

  // Orthonormal basis E (rows) of the fiber via QR of normals^T.
  Eigen::HouseholderQR<Mat> qr(normals.transpose());
  const Mat R = qr.matrixQR().topRows(3).triangularView<Eigen::Upper>();
  const double rmax = R.diagonal().cwiseAbs().maxCoeff();
  for (int i = 0; i < 3; ++i)
    if (std::abs(R(i, i)) < 1e-10 * std::max(rmax, 1e-300))
      throw ArgumentError("conormal_null_fiber: normals do not span a 3-dimensional fiber");
  const Mat Q = qr.householderQ() * Mat::Identity(n, 3);
  const Mat E = Q.transpose();  // 3 x n, orthonormal rows

  // Restricted quadratic form M = E G E^T with G = diag(alpha^2, -h).
  const double a = op.alpha(q);
  const Mat h = op.metric(q);
  Mat G = Mat::Zero(n, n);
  G(0, 0) = a * a;
  G.block(1, 1, n - 1, n - 1) = -h;
  const Mat M = E * G * E.transpose();

  Eigen::SelfAdjointEigenSolver<Mat> es(M);
  const Vec lam = es.eigenvalues();    // ascending
  const Mat V = es.eigenvectors();     // columns
  const double lmax = lam.cwiseAbs().maxCoeff();
  const double ztol = 1e-12 * std::max(lmax, 1e-300);
  int npos = 0, nneg = 0;
  for (int i = 0; i < 3; ++i) {
    if (lam[i] > ztol) ++npos;
    else if (lam[i] < -ztol) ++nneg;
  }

  NullFiber out;
  if (npos == 0 || nneg == 0) {
    out.definite = true;  // no sign change: the restricted form has no null cone
    return out;
  }

  // Pole = eigenvector of the minority sign; the null cone encircles it.
  // Along the great circle from the pole toward any unit w in the majority
  // plane, q(phi) = lam_p cos^2 phi + q(w) sin^2 phi has a single explicit
  // root (1-D root-finding along great circles, solved in closed form).
  int ipole;
  std::array<int, 2> iplane{};
  if (npos == 1) {
    ipole = (lam[0] > ztol) ? 0 : (lam[1] > ztol ? 1 : 2);
  } else {
    ipole = (lam[0] < -ztol) ? 0 : (lam[1] < -ztol ? 1 : 2);
  }
  for (int i = 0, k = 0; i < 3; ++i)
    if (i != ipole) iplane[k++] = i;

  const double lp = lam[ipole];
  const Vec vp = V.col(ipole);
  const Vec v2 = V.col(iplane[0]);
  const Vec v3 = V.col(iplane[1]);
  const double l2 = lam[iplane[0]];
  const double l3 = lam[iplane[1]];

  std::array<std::vector<CovectorPoint>, 2> circles;
  for (int k = 0; k < angular_res; ++k) {
    const double th = 2.0 * M_PI * k / angular_res;
    const double qw = l2 * std::cos(th) * std::cos(th) + l3 * std::sin(th) * std::sin(th);
    if (!(lp * qw < 0.0)) continue;  // degenerate direction (zero eigenvalue)
    const double phi = std::atan(std::sqrt(-lp / qw));
    const Vec w = std::cos(th) * v2 + std::sin(th) * v3;
    for (int sgn = 0; sgn < 2; ++sgn) {
      const Vec c = (sgn == 0 ? 1.0 : -1.0) * std::cos(phi) * vp + std::sin(phi) * w;
      Vec eta = E.transpose() * c;
      circles[sgn].push_back(CovectorPoint{q, eta});
    }
  }

  auto mean_tau = [](const std::vector<CovectorPoint>& pts) {
    double s = 0.0;
    for (const auto& p : pts) s += p.eta[0];
    return pts.empty() ? 0.0 : s / pts.size();
  };
  const int first = mean_tau(circles[0]) >= mean_tau(circles[1]) ? 0 : 1;
  for (const auto& p : circles[first]) out.points.push_back(p);
  for (const auto& p : circles[1 - first]) out.points.push_back(p);

  for (const auto& p : out.points) {
    if (std::abs(principal_symbol(op, p)) > kTolNull * p.eta.squaredNorm())
      throw NumericError("conormal_null_fiber: produced a non-null covector");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flow-out mesh
// ---------------------------------------------------------------------------

namespace {

// Signed determinant of the spatial tangent columns when square, otherwise
// the unsigned Gram volume.
double tangent_volume(const Mat& T) {
  if (T.rows() == T.cols()) return T.determinant();
  const Mat G = T.transpose() * T;
  const double d = G.determinant();
  return d > 0.0 ? std::sqrt(d) : 0.0;
}

}  // namespace

FrontMesh flow_out(const HyperbolicOperator& op, const std::vector<Vec>& gamma_samples,
                   const std::vector<std::vector<CovectorPoint>>& fibers, double s_max, int res,
                   const StepControl& ctrl, int threads) {
  if (gamma_samples.empty()) throw ArgumentError("flow_out: no gamma samples");
  if (fibers.size() != gamma_samples.size())
    throw ArgumentError("flow_out: fibers must match gamma samples");
  const int n_gamma = static_cast<int>(gamma_samples.size());
  const int n_fiber = static_cast<int>(fibers.front().size());
  if (n_fiber == 0) throw ArgumentError("flow_out: empty fiber");
  for (const auto& f : fibers)
    if (static_cast<int>(f.size()) != n_fiber)
      throw ArgumentError("flow_out: ragged fiber lists");
  if (s_max < 0.0) throw ArgumentError("flow_out: s_max must be >= 0 (forward flow)");

  std::vector<double> sgrid;
  if (!ctrl.record_s.empty()) {
    sgrid = ctrl.record_s;
    std::sort(sgrid.begin(), sgrid.end());
    if (sgrid.front() < 0.0 || sgrid.back() > s_max * (1.0 + 1e-12))
      throw ArgumentError("flow_out: record_s outside [0, s_max]");
  } else if (s_max == 0.0 || res <= 1) {
    sgrid = {0.0};
  } else {
    sgrid.resize(res);
    for (int i = 0; i < res; ++i) sgrid[i] = s_max * i / (res - 1);
  }
  const int n_s = static_cast<int>(sgrid.size());

  const int n = op.dim();
  FrontMesh mesh;
  mesh.n_gamma = n_gamma;
  mesh.n_fiber = n_fiber;
  mesh.n_s = n_s;
  mesh.dim = n;
  mesh.s_values = sgrid;
  const std::size_t n_nodes =
      static_cast<std::size_t>(n_gamma) * static_cast<std::size_t>(n_fiber) *
      static_cast<std::size_t>(n_s);
  mesh.points.assign(n_nodes, Vec::Zero(n));
  mesh.covectors.assign(mesh.points.size(), Vec::Zero(n));
  mesh.jacobian_det.assign(mesh.points.size(), 0.0);
  mesh.caustic_flag.assign(mesh.points.size(), 0);
  mesh.node_ok.assign(mesh.points.size(), 0);

  StepControl rctrl = ctrl;
  rctrl.record_accepted = false;
  rctrl.record_s = sgrid;

  const std::size_t n_rays = static_cast<std::size_t>(n_gamma) * n_fiber;
  parallel_for(n_rays, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      const int ig = static_cast<int>(r / n_fiber);
      const int ifib = static_cast<int>(r % n_fiber);
      const CovectorPoint& seed = fibers[ig][ifib];
      try {
        const Ray ray = trace_ray(op, seed, sgrid.back(), rctrl);
        // Match ray samples to the s grid (trace_ray always samples s = 0).
        std::size_t cursor = 0;
        for (int is = 0; is < n_s; ++is) {
          while (cursor < ray.s.size() && ray.s[cursor] < sgrid[is] - 1e-12) ++cursor;
          if (cursor >= ray.s.size() || std::abs(ray.s[cursor] - sgrid[is]) > 1e-9)
            throw NumericError("flow_out: missing sample on the s grid");
          const std::size_t node = mesh.index(ig, ifib, is);
          mesh.points[node] = ray.pts[cursor].y;
          mesh.covectors[node] = ray.pts[cursor].eta;
          mesh.node_ok[node] = 1;
        }
      } catch (const Error&) {
        // Hole: node_ok stays 0 for every s of this ray.
      }
    }
  });

  // --- parameter-grid tangents and determinant ---------------------------
  const bool fiber_periodic = [&] {
    if (n_fiber < 3) return false;
    std::vector<double> gaps;
    for (int i = 0; i + 1 < n_fiber; ++i)
      gaps.push_back((fibers[0][i + 1].eta - fibers[0][i].eta).norm());
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    const double med = gaps[gaps.size() / 2];
    const double wrap = (fibers[0][0].eta - fibers[0][n_fiber - 1].eta).norm();
    return wrap <= 2.5 * med;
  }();

  const int sd = n - 1;
  std::vector<uint8_t> jac_ok(mesh.points.size(), 0);
  auto spatial = [&](int ig, int ifib, int is) -> Vec {
    return mesh.points[mesh.index(ig, ifib, is)].tail(sd);
  };
  auto ok = [&](int ig, int ifib, int is) -> bool {
    return mesh.node_ok[mesh.index(ig, ifib, is)] != 0;
  };

  for (int ig = 0; ig < n_gamma; ++ig) {
    for (int ifib = 0; ifib < n_fiber; ++ifib) {
      for (int is = 0; is < n_s; ++is) {
        if (!ok(ig, ifib, is)) continue;
        std::vector<Vec> cols;

        // d/d(gamma index)
        if (n_gamma > 1) {
          const int gm = ig - 1, gp = ig + 1;
          const bool has_m = gm >= 0 && ok(gm, ifib, is);
          const bool has_p = gp < n_gamma && ok(gp, ifib, is);
          if (has_m && has_p)
            cols.push_back((spatial(gp, ifib, is) - spatial(gm, ifib, is)) / 2.0);
          else if (has_p)
            cols.push_back(spatial(gp, ifib, is) - spatial(ig, ifib, is));
          else if (has_m)
            cols.push_back(spatial(ig, ifib, is) - spatial(gm, ifib, is));
          else
            continue;
        }

        // d/d(fiber index)
        if (n_fiber > 1) {
          int fm = ifib - 1, fp = ifib + 1;
          if (fiber_periodic) {
            fm = (ifib - 1 + n_fiber) % n_fiber;
            fp = (ifib + 1) % n_fiber;
          }
          const bool has_m = fm >= 0 && fm < n_fiber && ok(ig, fm, is);
          const bool has_p = fp >= 0 && fp < n_fiber && ok(ig, fp, is);
          if (has_m && has_p && fm != fp)
            cols.push_back((spatial(ig, fp, is) - spatial(ig, fm, is)) / 2.0);
          else if (has_p)
            cols.push_back(spatial(ig, fp, is) - spatial(ig, ifib, is));
          else if (has_m)
            cols.push_back(spatial(ig, ifib, is) - spatial(ig, fm, is));
          else
            continue;
        }

        // d/ds (true s units; the s grid may be non-uniform)
        if (n_s > 1) {
          const int sm = is - 1, sp = is + 1;
          const bool has_m = sm >= 0 && ok(ig, ifib, sm);
          const bool has_p = sp < n_s && ok(ig, ifib, sp);
          if (has_m && has_p)
            cols.push_back((spatial(ig, ifib, sp) - spatial(ig, ifib, sm)) /
                           (sgrid[sp] - sgrid[sm]));
          else if (has_p)
            cols.push_back((spatial(ig, ifib, sp) - spatial(ig, ifib, is)) /
                           (sgrid[sp] - sgrid[is]));
          else if (has_m)
            cols.push_back((spatial(ig, ifib, is) - spatial(ig, ifib, sm)) /
                           (sgrid[is] - sgrid[sm]));
          else
            continue;
        }

        if (cols.empty()) continue;
        Mat T(sd, static_cast<int>(cols.size()));
        for (int c = 0; c < T.cols(); ++c) T.col(c) = cols[c];
        const std::size_t node = mesh.index(ig, ifib, is);
        mesh.jacobian_det[node] = tangent_volume(T);
        jac_ok[node] = 1;
      }
    }
  }

  // --- caustic flags ------------------------------------------------------
  std::vector<double> mags;
  for (std::size_t i = 0; i < mesh.points.size(); ++i) {
    const int is = static_cast<int>(i % n_s);
    if (jac_ok[i] && sgrid[is] > 0.0) mags.push_back(std::abs(mesh.jacobian_det[i]));
  }
  if (!mags.empty()) {
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    mesh.jacobian_median = mags[mags.size() / 2];
  }

  auto flaggable = [&](int is) { return sgrid[is] > 0.0; };
  for (int ig = 0; ig < n_gamma; ++ig) {
    for (int ifib = 0; ifib < n_fiber; ++ifib) {
      for (int is = 0; is < n_s; ++is) {
        const std::size_t node = mesh.index(ig, ifib, is);
        if (!jac_ok[node] || !flaggable(is)) continue;
        const double d = mesh.jacobian_det[node];
        bool flag = std::abs(d) < kTolCaustic * mesh.jacobian_median;
        // Sign change across a neighbor marks a zero crossing between nodes;
        // flag the smaller-magnitude side.
        auto sign_change = [&](int jg, int jf, int js) {
          if (jg < 0 || jg >= n_gamma || js < 0 || js >= n_s) return false;
          if (fiber_periodic)
            jf = (jf + n_fiber) % n_fiber;
          else if (jf < 0 || jf >= n_fiber)
            return false;
          const std::size_t nb = mesh.index(jg, jf, js);
          if (!jac_ok[nb] || !flaggable(js)) return false;
          const double dn = mesh.jacobian_det[nb];
          return d * dn < 0.0 && std::abs(d) <= std::abs(dn);
        };
        flag = flag || sign_change(ig, ifib, is - 1) || sign_change(ig, ifib, is + 1) ||
               sign_change(ig, ifib - 1, is) || sign_change(ig, ifib + 1, is) ||
               sign_change(ig - 1, ifib, is) || sign_change(ig + 1, ifib, is);
        mesh.caustic_flag[node] = flag ? 1 : 0;
      }
    }
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// Caustic scan
// ---------------------------------------------------------------------------

CausticReport caustic_scan(const FrontMesh& mesh) {
  if (mesh.jacobian_det.empty() || mesh.points.empty())
    throw ArgumentError("caustic_scan: mesh without jacobian data");
  CausticReport report;
  std::vector<uint8_t> seen(mesh.points.size(), 0);

  auto neighbors = [&](std::size_t node, std::vector<std::size_t>& out) {
    out.clear();
    const int is = static_cast<int>(node % mesh.n_s);
    const int ifib = static_cast<int>((node / mesh.n_s) % mesh.n_fiber);
    const int ig = static_cast<int>(node / (static_cast<std::size_t>(mesh.n_s) * mesh.n_fiber));
    auto push = [&](int jg, int jf, int js) {
      if (jg < 0 || jg >= mesh.n_gamma || js < 0 || js >= mesh.n_s) return;
      jf = (jf + mesh.n_fiber) % mesh.n_fiber;
      out.push_back(mesh.index(jg, jf, js));
    };
    push(ig - 1, ifib, is);
    push(ig + 1, ifib, is);
    push(ig, ifib - 1, is);
    push(ig, ifib + 1, is);
    push(ig, ifib, is - 1);
    push(ig, ifib, is + 1);
  };

  std::vector<std::size_t> nbs;
  for (std::size_t start = 0; start < mesh.points.size(); ++start) {
    if (!mesh.caustic_flag[start] || seen[start]) continue;
    CausticComponent comp;
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      comp.nodes.push_back(node);
      neighbors(node, nbs);
      for (std::size_t nb : nbs) {
        if (!seen[nb] && mesh.caustic_flag[nb]) {
          seen[nb] = 1;
          queue.push_back(nb);
        }
      }
    }
    std::sort(comp.nodes.begin(), comp.nodes.end());

    // Corank estimate from the covector spread: at a fold one tangent
    // direction collapses (corank 1); a higher corank shows as a second
    // vanishing singular value of the local spatial differences.
    comp.corank = 1;
    if (comp.nodes.size() >= 4) {
      const int sd = mesh.dim - 1;
      Mat D(sd, static_cast<int>(std::min<std::size_t>(comp.nodes.size(), 16)) );
      const Vec base = mesh.points[comp.nodes.front()].tail(sd);
      for (int c = 0; c < D.cols(); ++c)
        D.col(c) = mesh.points[comp.nodes[c * comp.nodes.size() / D.cols()]].tail(sd) - base;
      Eigen::JacobiSVD<Mat> svd(D);
      const auto& sv = svd.singularValues();
      int small = 0;
      for (int i = 0; i < sv.size(); ++i)
        if (sv[i] <= 0.05 * sv[0]) ++small;
      comp.corank = std::clamp(small, 1, 2);
    }
    report.n_flagged += comp.nodes.size();
    report.components.push_back(std::move(comp));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Apparent front speed on a slice
// ---------------------------------------------------------------------------

std::vector<FrontSpeedSample> apparent_front_speed(const FrontMesh& mesh, double x3,
                                                   const Vec& center,
                                                   const std::vector<double>& t_eval) {
  if (mesh.dim < 4)
    throw ArgumentError("apparent_front_speed: mesh must have at least 3 spatial dimensions");
  if (center.size() < 2) throw ArgumentError("apparent_front_speed: center needs 2 components");
  const double cx = center[0], cy = center[1];
  const double in_slice_tol = 1e-9 * std::max(1.0, std::abs(x3));

  struct Crossing {
    double t, R;
  };
  std::vector<Crossing> crossings;

  for (int ig = 0; ig < mesh.n_gamma; ++ig) {
    for (int ifib = 0; ifib < mesh.n_fiber; ++ifib) {
      for (int is = 0; is < mesh.n_s; ++is) {
        const std::size_t node = mesh.index(ig, ifib, is);
        if (!mesh.node_ok[node]) continue;
        const Vec& y = mesh.points[node];
        const double v = y[3] - x3;
        if (std::abs(v) <= in_slice_tol) {
          crossings.push_back({y[0], std::hypot(y[1] - cx, y[2] - cy)});
          continue;
        }
        if (is + 1 >= mesh.n_s) continue;
        const std::size_t next = mesh.index(ig, ifib, is + 1);
        if (!mesh.node_ok[next]) continue;
        const Vec& y2 = mesh.points[next];
        const double v2 = y2[3] - x3;
        if (std::abs(v2) <= in_slice_tol) continue;  // handled at the next node
        if (v * v2 < 0.0) {
          const double lam = v / (v - v2);
          const Vec p = y + lam * (y2 - y);
          crossings.push_back({p[0], std::hypot(p[1] - cx, p[2] - cy)});
        }
      }
    }
  }

  if (crossings.size() < 8)
    throw InsufficientDataError("apparent_front_speed: fewer than 8 slice crossings");
  std::sort(crossings.begin(), crossings.end(),
            [](const Crossing& a, const Crossing& b) { return a.t < b.t; });

  std::vector<FrontSpeedSample> out;
  const double t_span = crossings.back().t - crossings.front().t;
  for (double t : t_eval) {
    double w = std::max(0.02 * std::max(1.0, std::abs(t)), 1e-6);
    std::vector<const Crossing*> sel;
    while (true) {
      sel.clear();
      for (const auto& c : crossings)
        if (std::abs(c.t - t) <= w) sel.push_back(&c);
      if (sel.size() >= 8 || w > 2.0 * std::max(t_span, 1.0)) break;
      w *= 2.0;
    }
    if (sel.size() < 4) continue;  // no data near this time

    // Linear least squares R = b0 + b1 (t - t_ref).
    double sw = 0, st = 0, sr = 0, stt = 0, str = 0;
    for (const auto* c : sel) {
      const double dt = c->t - t;
      sw += 1;
      st += dt;
      sr += c->R;
      stt += dt * dt;
      str += dt * c->R;
    }
    const double det = sw * stt - st * st;
    if (std::abs(det) < 1e-30) continue;
    const double b1 = (sw * str - st * sr) / det;
    const double b0 = (stt * sr - st * str) / det;
    out.push_back(FrontSpeedSample{t, b0, b1});
  }
  if (out.empty())
    throw InsufficientDataError("apparent_front_speed: no evaluable times");
  return out;
}

}  // namespace triplewave
