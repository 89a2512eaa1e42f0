#pragma once

// Independent reference implementations used to pin expected values in tests.
// Each oracle deliberately avoids the code paths of the routine it checks:
// fixed-step classical RK4 instead of the adaptive embedded pair, direct
// O(N*K) Fourier sums instead of FFTW, and a dense ray fan with sign tracking
// instead of the mesh caustic flags.

#include <functional>
#include <vector>

#include "triplewave/geometry.hpp"

namespace triplewave::oracle {

/// Classical RK4 with n_steps fixed steps on z' = f(z), z(0) = z0.
Vec rk4_integrate(const std::function<Vec(const Vec&)>& f, Vec z0, double s_end, int n_steps);

/// Hamiltonian flow endpoint via rk4_integrate (independent of trace_ray's
/// adaptive stepper and its error control).
CovectorPoint rk4_flow(const HyperbolicOperator& op, const CovectorPoint& start, double s_end,
                       int n_steps);

/// Least-squares log-log slope of the windowed direct DFT amplitude of
/// `samples` over angular frequencies [lo, hi]. Direct cos/sin sums; own
/// window implementation.
double direct_dft_slope(const std::vector<double>& samples, double h, double lo, double hi);

/// Windowed direct DFT amplitude at bin k (for pointwise comparisons).
double direct_dft_amplitude(const std::vector<double>& samples, int k);

/// First fold of a point-source ray fan in a 2-D spatial medium: rays leave
/// `source` (spacetime) with unit-speed null covectors at angles
/// center_angle +- aperture, and the fan Jacobian sign is tracked along s.
struct FanFold {
  bool found = false;
  double s_first = 0.0;  // parameter of the first sign change
};
FanFold first_fan_fold(const HyperbolicOperator& op, const Vec& source, double center_angle,
                       double aperture, int n_rays, double s_max, int n_steps);

/// Fine-step RK4 solution of the transport law a' = -(c_t + 0.5 dlogJ/ds) a
/// given sampled coefficients on a uniform s grid (linear interpolation).
std::vector<Complex> transport_reference(const std::vector<double>& s,
                                         const std::vector<Complex>& c_t,
                                         const std::vector<double>& jac, Complex a0,
                                         int substeps_per_interval);

}  // namespace triplewave::oracle
