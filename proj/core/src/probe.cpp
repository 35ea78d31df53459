#include "dtpnet/probe.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>

#include "dtpnet/dsp.hpp"

namespace dtp {

namespace {

int default_pad(int kernel) {
  int pad = 1;
  while (pad < 4 * kernel) pad *= 2;
  return pad;
}

std::vector<double> magnitude_spectrum(const float* taps, int kernel,
                                       int pad_to) {
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(pad_to));
  for (int i = 0; i < kernel; ++i)
    buf[static_cast<std::size_t>(i)] = {static_cast<double>(taps[i]), 0.0};
  fft(buf);
  std::vector<double> mag(static_cast<std::size_t>(pad_to / 2 + 1));
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

}  // namespace

std::vector<FilterSpectrum> encoder_filter_spectra(
    const Tensor<float>& encoder_weight, double fs, int pad_to) {
  if (encoder_weight.rank() != 3 || encoder_weight.dim(1) != 1)
    throw ShapeError("encoder_filter_spectra: weight shape " +
                     encoder_weight.shape_str() + ", want [N x 1 x L]");
  const int filters = encoder_weight.dim(0);
  const int kernel = encoder_weight.dim(2);
  if (pad_to == 0) pad_to = default_pad(kernel);
  if (pad_to < kernel || (pad_to & (pad_to - 1)) != 0)
    throw ShapeError("encoder_filter_spectra: pad_to " +
                     std::to_string(pad_to) +
                     " must be a power of two >= L = " + std::to_string(kernel));

  std::vector<FilterSpectrum> out;
  out.reserve(static_cast<std::size_t>(filters));
  for (int f = 0; f < filters; ++f) {
    FilterSpectrum s;
    s.filter_index = f;
    s.magnitude = magnitude_spectrum(&encoder_weight.at(f, 0, 0), kernel, pad_to);
    std::size_t peak = 0;
    for (std::size_t k = 1; k < s.magnitude.size(); ++k)
      if (s.magnitude[k] > s.magnitude[peak]) peak = k;
    s.peak_frequency_hz = static_cast<double>(peak) * fs / pad_to;
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FilterSpectrum& a, const FilterSpectrum& b) {
                     if (a.peak_frequency_hz != b.peak_frequency_hz)
                       return a.peak_frequency_hz < b.peak_frequency_hz;
                     return a.filter_index < b.filter_index;
                   });
  return out;
}

double mean_filter_frequency(const Tensor<float>& encoder_weight, double fs,
                             FrequencyMode mode, int pad_to) {
  if (encoder_weight.rank() != 3 || encoder_weight.dim(1) != 1)
    throw ShapeError("mean_filter_frequency: weight shape " +
                     encoder_weight.shape_str() + ", want [N x 1 x L]");
  const int filters = encoder_weight.dim(0);
  const int kernel = encoder_weight.dim(2);
  if (pad_to == 0) pad_to = default_pad(kernel);

  double sum = 0.0;
  for (int f = 0; f < filters; ++f) {
    const std::vector<double> mag =
        magnitude_spectrum(&encoder_weight.at(f, 0, 0), kernel, pad_to);
    if (mode == FrequencyMode::PeakBin) {
      std::size_t peak = 0;
      for (std::size_t k = 1; k < mag.size(); ++k)
        if (mag[k] > mag[peak]) peak = k;
      sum += static_cast<double>(peak) * fs / pad_to;
    } else {
      double power = 0.0, weighted = 0.0;
      for (std::size_t k = 0; k < mag.size(); ++k) {
        const double p = mag[k] * mag[k];
        power += p;
        weighted += p * (static_cast<double>(k) * fs / pad_to);
      }
      sum += power > 0.0 ? weighted / power : 0.0;
    }
  }
  return sum / static_cast<double>(filters);
}

std::vector<RlpTrace> rlp(const Model<float>& model,
                          const std::vector<Tensor<float>>& encoded_inputs) {
  if (encoded_inputs.empty()) throw ConfigError("rlp: empty batch");
  const int blocks = model.config.num_blocks();
  std::vector<RlpTrace> traces(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b)
    traces[static_cast<std::size_t>(b)].block_index = b;
  std::vector<int> counted(static_cast<std::size_t>(blocks), 0);

  auto l2 = [](const Tensor<float>& t) {
    double s = 0.0;
    for (float v : t.values) s += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(s);
  };

  for (const Tensor<float>& z : encoded_inputs) {
    const SeparatorProbe<float> pass = separate_with_taps(model, z);
    for (int b = 0; b < blocks; ++b) {
      RlpTrace& trace = traces[static_cast<std::size_t>(b)];
      const double in_norm = l2(pass.block_inputs[static_cast<std::size_t>(b)]);
      const double out_norm =
          l2(pass.block_outputs[static_cast<std::size_t>(b)]);
      if (in_norm <= 0.0 || out_norm <= 0.0) {
        ++trace.excluded_samples;
        continue;
      }
      trace.mean_log10_ratio += std::log10(out_norm / in_norm);
      ++counted[static_cast<std::size_t>(b)];
    }
  }

  for (int b = 0; b < blocks; ++b) {
    RlpTrace& trace = traces[static_cast<std::size_t>(b)];
    if (counted[static_cast<std::size_t>(b)] > 0)
      trace.mean_log10_ratio /= counted[static_cast<std::size_t>(b)];
  }
  return traces;
}

double dilation_equivalence_report(const std::vector<double>& kernel,
                                   const std::vector<double>& signal, int d) {
  if (d < 1)
    throw ConfigError("dilation_equivalence_report: d " + std::to_string(d));
  if (kernel.empty() || signal.empty())
    throw ConfigError("dilation_equivalence_report: empty kernel or signal");
  if (static_cast<int>(signal.size()) % d != 0)
    throw ShapeError("dilation_equivalence_report: signal length " +
                     std::to_string(signal.size()) +
                     " not divisible by d = " + std::to_string(d));
  const int taps = static_cast<int>(kernel.size());
  const int length = static_cast<int>(signal.size());
  const int out_len = length - d * (taps - 1);
  if (out_len <= 0)
    throw ShapeError("dilation_equivalence_report: signal too short");

  Tensor<double> x({1, length}, signal);
  Tensor<double> w({1, 1, taps}, kernel);

  // side A: dilated convolution
  ConvSpec dilated;
  dilated.kernel = taps;
  dilated.dilation = d;
  const Tensor<double> a = conv1d(x, w, dilated);

  // side B: d stride-d phase subsequences, plain convolution, interleaved
  ConvSpec plain;
  plain.kernel = taps;
  const int sub_len = length / d;
  std::vector<double> interleaved(static_cast<std::size_t>(out_len), 0.0);
  for (int phase = 0; phase < d; ++phase) {
    Tensor<double> sub({1, sub_len});
    for (int i = 0; i < sub_len; ++i)
      sub.at(0, i) = signal[static_cast<std::size_t>(i * d + phase)];
    const Tensor<double> c = conv1d(sub, w, plain);
    for (int m = 0; m < c.dim(1); ++m) {
      const int t = m * d + phase;
      if (t < out_len) interleaved[static_cast<std::size_t>(t)] = c.at(0, m);
    }
  }

  double worst = 0.0;
  for (int t = 0; t < out_len; ++t) {
    worst = std::max(worst, std::fabs(a.at(0, t) -
                                      interleaved[static_cast<std::size_t>(t)]));
  }
  return worst;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError(IoErrorKind::OpenFailed, "cannot open " + path);
  f.precision(10);
  return f;
}

}  // namespace

void write_filter_spectra_csv(const std::string& path,
                              const std::vector<FilterSpectrum>& spectra) {
  auto f = open_csv(path);
  f << "index,peak_hz";
  if (!spectra.empty())
    for (std::size_t k = 0; k < spectra[0].magnitude.size(); ++k)
      f << ",bin" << k;
  f << "\n";
  for (const FilterSpectrum& s : spectra) {
    f << s.filter_index << "," << s.peak_frequency_hz;
    for (double m : s.magnitude) f << "," << m;
    f << "\n";
  }
  if (!f) throw IoError(IoErrorKind::WriteFailed, "write failed: " + path);
}

void write_freq_trace_csv(const std::string& path,
                          const std::vector<FreqTrace>& rows) {
  auto f = open_csv(path);
  f << "epoch,mean_peak_hz,val_loss\n";
  for (const FreqTrace& r : rows)
    f << r.epoch << "," << r.mean_peak_frequency_hz << "," << r.validation_loss
      << "\n";
  if (!f) throw IoError(IoErrorKind::WriteFailed, "write failed: " + path);
}

void write_rlp_csv(const std::string& path,
                   const std::vector<RlpTrace>& traces) {
  auto f = open_csv(path);
  f << "block,mean_log10_ratio,excluded_samples\n";
  for (const RlpTrace& t : traces)
    f << t.block_index << "," << t.mean_log10_ratio << ","
      << t.excluded_samples << "\n";
  if (!f) throw IoError(IoErrorKind::WriteFailed, "write failed: " + path);
}

}  // namespace dtp
