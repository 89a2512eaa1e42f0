#include "triplewave/anisonorm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "triplewave/fourier.hpp"

namespace triplewave {

namespace {

/// <a> = sqrt(1 + a^2) and the mixed bracket <eta_j, eta''>; for grids of
/// dimension <= 3 there are no eta'' components, so the bracket reduces to
/// the single-variable one.
double bracket1(double a) { return std::sqrt(1.0 + a * a); }

double weight_value(const AnisoIndex& idx, double delta, const double* eta, int n) {
  double eta2 = 0.0;
  for (int a = 0; a < n; ++a) eta2 += eta[a] * eta[a];
  double w = std::pow(1.0 + eta2, 0.5 * (idx.s - delta));
  for (int j = 0; j < std::min(n, 3); ++j) {
    const double kj = idx.k(j);
    if (kj != 0.0) w *= std::pow(bracket1(eta[j]), kj);
  }
  return w;
}

void validate_dims(const std::vector<double>& field, const std::vector<int>& dims) {
  if (dims.empty() || dims.size() > 3)
    throw ArgumentError("aniso_norm: grid dimension must be 1, 2, or 3");
  std::size_t n = 1;
  for (int d : dims) {
    if (d < 64) throw ArgumentError("aniso_norm: need at least 64 cells per axis");
    n *= static_cast<std::size_t>(d);
  }
  if (n != field.size()) throw ArgumentError("aniso_norm: field size does not match dims");
}

}  // namespace

bool AnisoIndex::dominates(const AnisoIndex& other) const {
  return s >= other.s && k1 >= other.k1 && k2 >= other.k2 && k3 >= other.k3;
}

double aniso_norm(const std::vector<double>& field, const std::vector<int>& dims, double h,
                  const AnisoIndex& idx, double delta) {
  validate_dims(field, dims);
  if (!(h > 0.0)) throw ArgumentError("aniso_norm: spacing must be positive");

  const std::vector<Complex> spec = dft_forward(field, dims);
  const int rank = static_cast<int>(dims.size());
  std::size_t total = spec.size();

  // ||u||^2 = h^n / N * sum_k W(eta_k)^2 |u_hat_k|^2  (matches the L2
  // integral norm when W == 1).
  double acc = 0.0;
  std::vector<int> kidx(rank, 0);
  double eta[3] = {0, 0, 0};
  for (std::size_t c = 0; c < total; ++c) {
    for (int a = 0; a < rank; ++a) eta[a] = dft_frequency(kidx[a], dims[a], h);
    const double w = weight_value(idx, delta, eta, rank);
    acc += w * w * std::norm(spec[c]);
    for (int a = rank - 1; a >= 0; --a) {
      if (++kidx[a] < dims[a]) break;
      kidx[a] = 0;
    }
  }
  const double n_total = static_cast<double>(total);
  return std::sqrt(acc * std::pow(h, rank) / n_total);
}

KernelIntegral kernel_integral(const AnisoIndex& idx, double delta, int n) {
  if (n < 1 || n > 4) throw ArgumentError("kernel_integral: dimension must be 1..4");
  const double sigma = idx.s - delta;
  const int n_dist = std::min(n, 3);

  KernelIntegral out;
  // Radial-bound criterion over every nonempty subset of distinguished axes.
  out.converges = true;
  for (int bits = 1; bits < (1 << n_dist); ++bits) {
    double ks = 0.0;
    int card = 0;
    for (int j = 0; j < n_dist; ++j)
      if (bits & (1 << j)) {
        ks += idx.k(j);
        ++card;
      }
    const bool full = card == n_dist;
    const double bound = full ? static_cast<double>(n) : static_cast<double>(card);
    if (!(2.0 * (ks + sigma) > bound)) {
      out.converges = false;
      break;
    }
  }

  // Numeric estimate on expanding boxes [-R, R]^n with a cubically graded
  // tensor grid (eta = R v^3 clusters nodes at the origin).
  const int n_nodes = 49;  // per axis, odd so the origin is a node
  auto box_integral = [&](double R) {
    std::vector<double> nodes(n_nodes), jac(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
      const double v = -1.0 + 2.0 * i / (n_nodes - 1);
      nodes[i] = R * v * v * v;
      jac[i] = 3.0 * R * v * v * (2.0 / (n_nodes - 1));
      if (i == 0 || i == n_nodes - 1) jac[i] *= 0.5;  // trapezoid ends
    }
    double acc = 0.0;
    std::vector<int> kidx(n, 0);
    double eta[4] = {0, 0, 0, 0};
    while (true) {
      double wj = 1.0;
      for (int a = 0; a < n; ++a) {
        eta[a] = nodes[kidx[a]];
        wj *= jac[kidx[a]];
      }
      if (wj != 0.0) {
        const double w = weight_value(idx, delta, eta, n);
        acc += wj / (w * w);
      }
      int a = n - 1;
      for (; a >= 0; --a) {
        if (++kidx[a] < n_nodes) break;
        kidx[a] = 0;
      }
      if (a < 0) break;
    }
    return acc;
  };

  double prev = box_integral(8.0);
  double prev_inc = prev;
  for (double R : {16.0, 32.0, 64.0, 128.0}) {
    const double cur = box_integral(R);
    const double inc = cur - prev;
    out.value = cur;
    out.value_converged = inc <= 0.02 * std::max(cur, 1e-300) && inc <= prev_inc;
    prev = cur;
    prev_inc = inc;
  }
  return out;
}

double product_closure_ratio(const std::vector<double>& u, const std::vector<double>& v,
                             const std::vector<int>& dims, double h, const AnisoIndex& idx,
                             double delta) {
  if (u.size() != v.size()) throw ArgumentError("product_closure_ratio: size mismatch");
  // Norms taken at base order zero: the weight is <eta>^{-delta} times the
  // distinguished-axis brackets.
  AnisoIndex eff;
  eff.k1 = idx.k1;
  eff.k2 = idx.k2;
  eff.k3 = idx.k3;
  const double nu = aniso_norm(u, dims, h, eff, delta);
  const double nv = aniso_norm(v, dims, h, eff, delta);
  if (!std::isfinite(nu) || !std::isfinite(nv) || nu == 0.0 || nv == 0.0)
    throw ArgumentError("product_closure_ratio: input norms must be finite and nonzero");
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] * v[i];
  return aniso_norm(w, dims, h, eff, delta) / (nu * nv);
}

EmbeddingCheck linf_embedding_check(const std::vector<double>& u, const std::vector<int>& dims,
                                    double h, const AnisoIndex& idx, double delta) {
  EmbeddingCheck out;
  for (double x : u) out.sup_norm = std::max(out.sup_norm, std::abs(x));
  out.norm = aniso_norm(u, dims, h, idx, delta);
  out.constant = out.norm > 0.0 ? out.sup_norm / out.norm : 0.0;
  const KernelIntegral ki = kernel_integral(idx, delta, static_cast<int>(dims.size()));
  out.kernel_value = ki.value;
  out.kernel_converges = ki.converges && ki.value_converged;
  return out;
}

}  // namespace triplewave
