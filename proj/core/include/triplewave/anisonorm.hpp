#pragma once

// Discrete anisotropic Fourier norms: weighted-L2 norms with weight
//   W(eta) = <eta_1, eta''>^{k1} <eta_2, eta''>^{k2} <eta_3, eta''>^{k3} <eta>^{s - delta}
// on fields given in straightened coordinates (the j-th distinguished
// hypersurface is {y_j = 0}); eta'' denotes frequency components beyond the
// first three axes, and <a, b> = (1 + |a|^2 + |b|^2)^{1/2}. Grids of dimension
// 1..3 are supported; axes beyond the field dimension contribute no weight.

#include "triplewave/common.hpp"

namespace triplewave {

struct AnisoIndex {
  double s = 0.0;
  double k1 = 0.0, k2 = 0.0, k3 = 0.0;

  double k(int j) const { return j == 0 ? k1 : (j == 1 ? k2 : k3); }
  double ksum() const { return k1 + k2 + k3; }
  /// Componentwise order: (s,k) dominates (s',k') iff s >= s' and k_j >= k_j'.
  bool dominates(const AnisoIndex& other) const;
};

inline constexpr double kDefaultDelta = 0.05;

/// Weighted-L2 norm of a real field on a `dims` grid with uniform spacing h.
/// Continuum normalization (matches the L2 integral norm at unit weight).
/// Throws ArgumentError when any axis has fewer than 64 cells.
double aniso_norm(const std::vector<double>& field, const std::vector<int>& dims, double h,
                  const AnisoIndex& idx, double delta = 0.0);

/// Convergence of the weight-kernel integral int W^{-2} d eta over n-space.
/// `converges` is the radial-bound criterion (with sigma = s - delta):
/// 2(sum_{j in S} k_j + sigma) > |S| for every nonempty proper subset S of the
/// distinguished axes, and 2(k1+k2+k3+sigma) > n for the full space. `value`
/// is a numeric estimate on expanding frequency boxes; `value_converged`
/// reports whether the increments contracted.
struct KernelIntegral {
  bool converges = false;
  double value = 0.0;
  bool value_converged = false;
};
KernelIntegral kernel_integral(const AnisoIndex& idx, double delta, int n);

/// ||uv|| / (||u|| ||v||) at index (s = -delta, k1, k2, k3). Throws
/// ArgumentError when either input norm is non-finite.
double product_closure_ratio(const std::vector<double>& u, const std::vector<double>& v,
                             const std::vector<int>& dims, double h, const AnisoIndex& idx,
                             double delta = kDefaultDelta);

/// sup|u| against the norm, plus the Cauchy-Schwarz bound
/// sup|u| <= (2 pi)^{-n/2} ||u|| * sqrt(int W^{-2} d eta) when that integral
/// converges (the exponent -n/2 reflects the norm's L2-matching
/// normalization).
struct EmbeddingCheck {
  double sup_norm = 0.0;
  double norm = 0.0;
  double constant = 0.0;   // sup / norm
  double kernel_value = 0.0;
  bool kernel_converges = false;
};
EmbeddingCheck linf_embedding_check(const std::vector<double>& u, const std::vector<int>& dims,
                                    double h, const AnisoIndex& idx, double delta = kDefaultDelta);

}  // namespace triplewave
