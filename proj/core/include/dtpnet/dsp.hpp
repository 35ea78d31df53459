#pragma once

#include <complex>
#include <vector>

#include "dtpnet/signal.hpp"

namespace dtp {

// In-place radix-2 decimation-in-time transform. Length must be a power of
// two; the inverse scales by 1/n.
void fft(std::vector<std::complex<double>>& data, bool inverse = false);

// One-sided power spectral density.
struct Psd {
  std::vector<double> freqs;  // 0 .. fs/2
  std::vector<double> power;  // density, unit^2 / Hz
};

struct PsdParams {
  int seg_len = 0;  // 0 -> min(256, largest power of two <= T)
  double overlap_fraction = 0.5;
};

// Welch estimate: Hann window, overlapping averaged periodograms, density
// scaling compensated by the window power.
Psd psd_welch(const std::vector<double>& x, double fs,
              const PsdParams& params = {});
Psd psd_welch(const Segment& x, const PsdParams& params = {});

// integral of power over [lo_hz, hi_hz] divided by the total
double band_power_fraction(const Psd& psd, double lo_hz, double hi_hz);

}  // namespace dtp
