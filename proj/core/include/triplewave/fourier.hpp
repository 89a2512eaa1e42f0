#pragma once

// Thin deterministic wrappers around FFTW (real-to-complex transforms, plan
// per call with FFTW_ESTIMATE) plus DFT frequency helpers and smooth windows.

#include "triplewave/common.hpp"

namespace triplewave {

/// Forward DFT of a real field on a row-major `dims` grid. Output is the
/// full complex spectrum (size = product of dims), unnormalized (FFTW sign
/// convention, exponent -i eta.x).
std::vector<Complex> dft_forward(const std::vector<double>& field, const std::vector<int>& dims);

/// Inverse DFT back to a real field; input must be conjugate-symmetric
/// (as produced from a real field); output normalized by 1/prod(dims).
std::vector<double> dft_inverse_real(const std::vector<Complex>& spec,
                                     const std::vector<int>& dims);

/// Angular frequency of DFT bin k on an axis of length n with spacing h
/// (signed, in (-pi/h, pi/h]).
double dft_frequency(int k, int n, double h);

/// C-infinity plateau window on [0, n): identically 1 on the middle
/// (1 - 2*taper) fraction and decaying smoothly to 0 at both ends.
/// Used before spectral fits so that window leakage decays faster than any
/// polynomial.
std::vector<double> plateau_window(int n, double taper = 0.25);

/// The underlying C-infinity step: 0 for z <= 0, 1 for z >= 1.
double smoothstep_cinf(double z);

}  // namespace triplewave
