#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtpnet/tensor.hpp"

namespace dtp {

// Single-channel signal with sample rate. Amplitudes are arbitrary units.
struct Segment {
  std::vector<float> samples;
  float sample_rate_hz = 0.f;

  int length() const { return static_cast<int>(samples.size()); }
  double rms() const;
};

// One realization of contaminated = clean + lambda * artifact.
struct MixRecord {
  Segment clean;
  Segment artifact;
  Segment contaminated;
  double lambda = 0.0;
  double snr_db = 0.0;  // requested input SNR
};

struct DatasetSplit {
  std::vector<MixRecord> train, val, test;
};

enum class ArtifactKind { Eog, Emg, Both };

ArtifactKind artifact_kind_from_name(const std::string& name);
const char* artifact_kind_name(ArtifactKind kind);

// Synthetic stand-ins for the recorded corpora. Contracts are spectral:
// clean EEG keeps >=90% of its power below 30 Hz, EOG >=90% inside
// 0.5..5 Hz, EMG >=80% above 20 Hz. All outputs are unit RMS and a pure
// function of (parameters, seed); segment i only consumes its own stream.
std::vector<Segment> gen_clean_eeg(int count, int length, double fs,
                                   std::uint64_t seed);
std::vector<Segment> gen_eog(int count, int length, double fs,
                             std::uint64_t seed);
std::vector<Segment> gen_emg(int count, int length, double fs,
                             std::uint64_t seed);

// lambda = RMS(clean) / (RMS(artifact) * 10^(snr_db/20))
double lambda_for_snr(const Segment& clean, const Segment& artifact,
                      double snr_db);

// measured input SNR of clean vs lambda*artifact, in dB
double measured_input_snr_db(const Segment& clean, const Segment& artifact,
                             double lambda);

MixRecord mix(const Segment& clean, const Segment& artifact, double lambda);

struct DatasetParams {
  int count = 100;
  int segment_len = 512;
  double sample_rate_hz = 256.0;
  ArtifactKind artifact = ArtifactKind::Eog;
  int snr_min_db = -7;
  int snr_max_db = 2;
  std::uint64_t seed = 0;
};

// Integer SNR levels drawn uniformly from [snr_min_db, snr_max_db];
// 80/10/10 split by clean-segment index.
DatasetSplit make_dataset(const DatasetParams& params);

// Segment file, binary little-endian: magic "EEGS", u32 version = 1,
// u32 n_segments, u32 segment_len, f32 sample_rate_hz, then
// n_segments * segment_len f32 samples. Uniform length and rate per file.
void write_segments(const std::string& path,
                    const std::vector<Segment>& segments);
std::vector<Segment> read_segments(const std::string& path);

// One segment per row, comma-separated samples.
std::vector<Segment> read_segments_csv(const std::string& path, double fs);

Tensor<float> tensor_from_segment(const Segment& s);
Segment segment_from_tensor(const Tensor<float>& t, float fs);

}  // namespace dtp
