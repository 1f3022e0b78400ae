#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

#include "polygas/core.hpp"

namespace polygas {

using cplx = std::complex<double>;

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/**
 * @brief In-place d-dimensional DFT on a cubic torus of side `side`.
 *
 * forward: F(p) = sum_x f(x) e^{-i p x};  inverse: f(x) = V^{-1} sum_p F(p) e^{i p x}.
 */
inline void fft_cube(std::vector<cplx>& data, int side, int d, bool forward) {
  std::size_t volume = static_cast<std::size_t>(ipow(side, d));
  if (data.size() != volume) throw DomainError("fft_cube: size mismatch");
  std::vector<int> dims(d, side);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft(d, dims.data(), buf, buf, forward ? FFTW_FORWARD : FFTW_BACKWARD,
                         FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  if (!forward) {
    double inv = 1.0 / static_cast<double>(volume);
    for (auto& v : data) v *= inv;
  }
}

/// Forward transform of a real array; returns the complex spectrum.
inline std::vector<cplx> fft_forward_real(const std::vector<double>& f, int side, int d) {
  std::vector<cplx> data(f.begin(), f.end());
  fft_cube(data, side, d, true);
  return data;
}

/// Inverse transform of a spectrum known to give a real result.
inline std::vector<double> fft_inverse_real(const std::vector<cplx>& spec, int side, int d) {
  std::vector<cplx> data = spec;
  fft_cube(data, side, d, false);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real();
  return out;
}

}  // namespace polygas
