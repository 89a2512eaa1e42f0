#include "triplewave/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numeric>

namespace triplewave {

namespace {

// FFTW planning mutates global state; serialize it. Execution is thread-safe.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

std::size_t product(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d <= 0) throw ArgumentError("dft: non-positive grid dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

std::vector<Complex> dft_forward(const std::vector<double>& field, const std::vector<int>& dims) {
  const std::size_t n = product(dims);
  if (field.size() != n) throw ArgumentError("dft_forward: field size does not match dims");

  // Complex-to-complex keeps the full spectrum layout simple for the weighted
  // sums downstream; the r2c saving is irrelevant at these sizes.
  std::vector<Complex> in(n), out(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = Complex(field[i], 0.0);

  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(),
                         reinterpret_cast<fftw_complex*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                         FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  if (!plan) throw NumericError("dft_forward: FFTW planning failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<double> dft_inverse_real(const std::vector<Complex>& spec,
                                     const std::vector<int>& dims) {
  const std::size_t n = product(dims);
  if (spec.size() != n) throw ArgumentError("dft_inverse_real: spectrum size does not match dims");

  std::vector<Complex> in(spec), out(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(),
                         reinterpret_cast<fftw_complex*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
                         FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  if (!plan) throw NumericError("dft_inverse_real: FFTW planning failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }

  std::vector<double> field(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) field[i] = out[i].real() * scale;
  return field;
}

double dft_frequency(int k, int n, double h) {
  if (n <= 0 || h <= 0) throw ArgumentError("dft_frequency: need n > 0 and h > 0");
  int kk = k % n;
  if (kk < 0) kk += n;
  // Map to the signed range; Nyquist (n even, kk == n/2) goes to +pi/h.
  if (2 * kk > n) kk -= n;
  return 2.0 * M_PI * static_cast<double>(kk) / (static_cast<double>(n) * h);
}

double smoothstep_cinf(double z) {
  if (z <= 0.0) return 0.0;
  if (z >= 1.0) return 1.0;
  // g(z) = f(z) / (f(z) + f(1-z)) with f(z) = exp(-1/z): all derivatives
  // vanish at both ends.
  const double a = std::exp(-1.0 / z);
  const double b = std::exp(-1.0 / (1.0 - z));
  return a / (a + b);
}

std::vector<double> plateau_window(int n, double taper) {
  if (n <= 0) throw ArgumentError("plateau_window: need n > 0");
  if (taper < 0.0 || taper > 0.5) throw ArgumentError("plateau_window: taper must be in [0, 1/2]");
  std::vector<double> w(n, 1.0);
  const double edge = taper * static_cast<double>(n - 1);
  if (edge <= 0.0) return w;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    const double right = static_cast<double>(n - 1) - x;
    double v = 1.0;
    if (x < edge) v *= smoothstep_cinf(x / edge);
    if (right < edge) v *= smoothstep_cinf(right / edge);
    w[i] = v;
  }
  return w;
}

}  // namespace triplewave
