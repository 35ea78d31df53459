#pragma once

#include <string>
#include <vector>

#include "dtpnet/model.hpp"

namespace dtp {

struct FilterSpectrum {
  int filter_index = 0;
  double peak_frequency_hz = 0.0;
  std::vector<double> magnitude;  // one-sided bins
};

enum class FrequencyMode { PeakBin, SpectralCentroid };

// Zero-pads each encoder filter to pad_to, takes the magnitude spectrum and
// sorts by peak frequency (stable, ties break on filter index).
std::vector<FilterSpectrum> encoder_filter_spectra(
    const Tensor<float>& encoder_weight, double fs, int pad_to);

// Mean of the per-filter peak frequencies; pad_to 0 picks the smallest
// power of two >= 4 L.
double mean_filter_frequency(const Tensor<float>& encoder_weight, double fs,
                             FrequencyMode mode = FrequencyMode::PeakBin,
                             int pad_to = 0);

struct FreqTrace {
  int epoch = 0;
  double mean_peak_frequency_hz = 0.0;
  double validation_loss = 0.0;
};

struct RlpTrace {
  int block_index = 0;
  double mean_log10_ratio = 0.0;
  int excluded_samples = 0;  // zero-norm inputs or outputs
};

// Per-block log10(||block(h)||_2 / ||h||_2) averaged over the batch of
// encoded inputs; works for every connectivity variant and never mutates
// the model.
std::vector<RlpTrace> rlp(const Model<float>& model,
                          const std::vector<Tensor<float>>& encoded_inputs);

// Both sides of the dilation/downsampling identity: a d-dilated convolution
// versus d phase-split stride-d convolutions interleaved. Returns the max
// absolute deviation.
double dilation_equivalence_report(const std::vector<double>& kernel,
                                   const std::vector<double>& signal, int d);

void write_filter_spectra_csv(const std::string& path,
                              const std::vector<FilterSpectrum>& spectra);
void write_freq_trace_csv(const std::string& path,
                          const std::vector<FreqTrace>& rows);
void write_rlp_csv(const std::string& path,
                   const std::vector<RlpTrace>& traces);

}  // namespace dtp
