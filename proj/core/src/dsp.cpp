#include "dtpnet/dsp.hpp"

#include <cmath>

#include "dtpnet/errors.hpp"

namespace dtp {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void fft(std::vector<std::complex<double>>& data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n))
    throw ShapeError("fft: length " + std::to_string(n) +
                     " is not a power of two");
  if (n == 1) return;

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& c : data) c *= inv;
  }
}

Psd psd_welch(const std::vector<double>& x, double fs,
              const PsdParams& params) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw ShapeError("psd_welch: signal length " + std::to_string(n));

  int seg_len = params.seg_len;
  if (seg_len == 0) {
    seg_len = 1;
    while (seg_len * 2 <= n && seg_len < 256) seg_len *= 2;
  }
  if (!is_power_of_two(static_cast<std::size_t>(seg_len)))
    throw ShapeError("psd_welch: seg_len " + std::to_string(seg_len) +
                     " is not a power of two");
  if (seg_len > n)
    throw ShapeError("psd_welch: seg_len " + std::to_string(seg_len) +
                     " > signal length " + std::to_string(n));
  if (params.overlap_fraction < 0.0 || params.overlap_fraction >= 1.0)
    throw ConfigError("psd_welch: overlap_fraction out of [0, 1)");

  int step = static_cast<int>(seg_len * (1.0 - params.overlap_fraction));
  if (step < 1) step = 1;

  std::vector<double> window(static_cast<std::size_t>(seg_len));
  double window_power = 0.0;
  for (int i = 0; i < seg_len; ++i) {
    const double w = 0.5 * (1.0 - std::cos(2.0 * kPi * i / seg_len));
    window[static_cast<std::size_t>(i)] = w;
    window_power += w * w;
  }

  const int bins = seg_len / 2 + 1;
  Psd psd;
  psd.freqs.resize(static_cast<std::size_t>(bins));
  psd.power.assign(static_cast<std::size_t>(bins), 0.0);
  for (int k = 0; k < bins; ++k)
    psd.freqs[static_cast<std::size_t>(k)] = k * fs / seg_len;

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(seg_len));
  int frames = 0;
  for (int start = 0; start + seg_len <= n; start += step) {
    for (int i = 0; i < seg_len; ++i) {
      buf[static_cast<std::size_t>(i)] = {
          x[static_cast<std::size_t>(start + i)] *
              window[static_cast<std::size_t>(i)],
          0.0};
    }
    fft(buf);
    for (int k = 0; k < bins; ++k) {
      const double mag2 = std::norm(buf[static_cast<std::size_t>(k)]);
      const double one_sided = (k == 0 || k == seg_len / 2) ? 1.0 : 2.0;
      psd.power[static_cast<std::size_t>(k)] +=
          one_sided * mag2 / (fs * window_power);
    }
    ++frames;
  }

  for (double& p : psd.power) p /= static_cast<double>(frames);
  return psd;
}

Psd psd_welch(const Segment& x, const PsdParams& params) {
  std::vector<double> values(x.samples.begin(), x.samples.end());
  return psd_welch(values, x.sample_rate_hz, params);
}

double band_power_fraction(const Psd& psd, double lo_hz, double hi_hz) {
  double total = 0.0, band = 0.0;
  for (std::size_t k = 0; k < psd.power.size(); ++k) {
    total += psd.power[k];
    if (psd.freqs[k] >= lo_hz && psd.freqs[k] <= hi_hz) band += psd.power[k];
  }
  if (total <= 0.0)
    throw MetricDomainError("band_power_fraction: zero total power");
  return band / total;
}

}  // namespace dtp
