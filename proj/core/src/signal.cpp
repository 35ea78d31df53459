#include "dtpnet/signal.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dtpnet/rng.hpp"

namespace dtp {

// the segment file format is little-endian
static_assert(std::endian::native == std::endian::little);

namespace {

constexpr double kPi = 3.14159265358979323846;

// role salts so clean/EOG/EMG streams never collide for one master seed
constexpr std::uint64_t kCleanStream = 0x11;
constexpr std::uint64_t kEogStream = 0x22;
constexpr std::uint64_t kEmgStream = 0x33;
constexpr std::uint64_t kMixStream = 0x44;

void check_gen_params(int count, int length, double fs) {
  if (count < 1) throw ConfigError("generator: count " + std::to_string(count));
  if (fs < 64.0)
    throw ConfigError("generator: sample rate " + std::to_string(fs) +
                      " Hz below 64 Hz");
  if (length < fs / 2.0)
    throw ConfigError("generator: length " + std::to_string(length) +
                      " shorter than half a second");
}

void normalize_rms(std::vector<double>& x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  const double r = std::sqrt(sum / static_cast<double>(x.size()));
  if (r <= 0.0) throw ConfigError("generator: degenerate all-zero segment");
  for (double& v : x) v /= r;
}

Segment to_segment(const std::vector<double>& x, double fs) {
  Segment s;
  s.sample_rate_hz = static_cast<float>(fs);
  s.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    s.samples[i] = static_cast<float>(x[i]);
  return s;
}

double segment_power(const Segment& s) {
  double sum = 0.0;
  for (float v : s.samples)
    sum += static_cast<double>(v) * static_cast<double>(v);
  return sum / static_cast<double>(s.samples.size());
}

// random-phase sinusoid bank with 1/f amplitude shaping
std::vector<double> pink_noise(Rng& rng, int length, double fs) {
  std::vector<double> x(static_cast<std::size_t>(length), 0.0);
  const int bands = 96;
  const double f_lo = 1.0, f_hi = fs / 2.0 * 0.95;
  for (int b = 0; b < bands; ++b) {
    // log-spaced frequencies cover the band evenly per octave
    const double frac = (b + rng.uniform()) / bands;
    const double f = f_lo * std::pow(f_hi / f_lo, frac);
    const double amp = 1.0 / std::sqrt(f);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    const double w = 2.0 * kPi * f / fs;
    for (int t = 0; t < length; ++t)
      x[static_cast<std::size_t>(t)] += amp * std::sin(w * t + phase);
  }
  return x;
}

}  // namespace

double Segment::rms() const {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (float v : samples)
    sum += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(sum / static_cast<double>(samples.size()));
}

ArtifactKind artifact_kind_from_name(const std::string& name) {
  if (name == "eog") return ArtifactKind::Eog;
  if (name == "emg") return ArtifactKind::Emg;
  if (name == "both") return ArtifactKind::Both;
  throw ConfigError("artifact kind '" + name + "', want eog|emg|both");
}

const char* artifact_kind_name(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::Eog: return "eog";
    case ArtifactKind::Emg: return "emg";
    case ArtifactKind::Both: return "both";
  }
  return "?";
}

std::vector<Segment> gen_clean_eeg(int count, int length, double fs,
                                   std::uint64_t seed) {
  check_gen_params(count, length, fs);
  // band edges: delta 1-4, theta 4-8, alpha 8-13, beta 13-30
  static constexpr double kBands[4][2] = {
      {1.0, 4.0}, {4.0, 8.0}, {8.0, 13.0}, {13.0, 30.0}};

  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, kCleanStream) ^ static_cast<std::uint64_t>(i));
    std::vector<double> x(static_cast<std::size_t>(length), 0.0);

    const int oscillators = rng.uniform_int(6, 10);
    double osc_power = 0.0;
    for (int o = 0; o < oscillators; ++o) {
      const auto& band = kBands[rng.uniform_int(0, 3)];
      const double f = rng.uniform(band[0], band[1]);
      const double amp = rng.uniform(0.3, 1.0);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      const double w = 2.0 * kPi * f / fs;
      for (int t = 0; t < length; ++t)
        x[static_cast<std::size_t>(t)] += amp * std::sin(w * t + phase);
      osc_power += amp * amp / 2.0;
    }

    // 1/f floor at -10 dB relative to the oscillator power
    std::vector<double> noise = pink_noise(rng, length, fs);
    double noise_power = 0.0;
    for (double v : noise) noise_power += v * v;
    noise_power /= static_cast<double>(length);
    const double target = osc_power * 0.1;
    const double gain = std::sqrt(target / noise_power);
    for (int t = 0; t < length; ++t)
      x[static_cast<std::size_t>(t)] += gain * noise[static_cast<std::size_t>(t)];

    normalize_rms(x);
    out.push_back(to_segment(x, fs));
  }
  return out;
}

std::vector<Segment> gen_eog(int count, int length, double fs,
                             std::uint64_t seed) {
  check_gen_params(count, length, fs);
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, kEogStream) ^ static_cast<std::uint64_t>(i));
    std::vector<double> x(static_cast<std::size_t>(length), 0.0);

    // Gaussian-windowed low-frequency pulses; the window keeps the spectrum
    // inside 0.5..5 Hz
    const double duration = length / fs;
    const int blinks = rng.uniform_int(1, std::max(1, static_cast<int>(duration)));
    for (int b = 0; b < blinks; ++b) {
      const double center = rng.uniform(0.15, 0.85) * duration;
      const double sigma = rng.uniform(0.30, 0.50);        // seconds
      const double f = rng.uniform(1.5, 3.5);              // Hz
      const double amp = rng.uniform(0.5, 1.0);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      for (int t = 0; t < length; ++t) {
        const double dt = t / fs - center;
        const double env = std::exp(-0.5 * dt * dt / (sigma * sigma));
        x[static_cast<std::size_t>(t)] +=
            amp * env * std::sin(2.0 * kPi * f * dt + phase);
      }
    }

    normalize_rms(x);
    out.push_back(to_segment(x, fs));
  }
  return out;
}

std::vector<Segment> gen_emg(int count, int length, double fs,
                             std::uint64_t seed) {
  check_gen_params(count, length, fs);
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, kEmgStream) ^ static_cast<std::uint64_t>(i));
    const std::size_t n = static_cast<std::size_t>(length);

    // broadband bank above 25 Hz
    std::vector<double> wide(n, 0.0);
    const int bands = 128;
    const double f_lo = 25.0, f_hi = fs / 2.0 * 0.95;
    for (int b = 0; b < bands; ++b) {
      const double f = rng.uniform(f_lo, f_hi);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      const double amp = rng.uniform(0.5, 1.0);
      const double w = 2.0 * kPi * f / fs;
      for (int t = 0; t < length; ++t)
        wide[static_cast<std::size_t>(t)] += amp * std::sin(w * t + phase);
    }

    // smooth burst gate with a small resting baseline
    std::vector<double> gate(n, 0.1);
    const double duration = length / fs;
    const int bursts = rng.uniform_int(1, 3);
    for (int b = 0; b < bursts; ++b) {
      const double center = rng.uniform(0.1, 0.9) * duration;
      const double width = rng.uniform(0.2, 0.6);  // seconds
      const double level = rng.uniform(0.6, 1.0);
      for (int t = 0; t < length; ++t) {
        const double dt = (t / fs - center) / width;
        gate[static_cast<std::size_t>(t)] += level * std::exp(-0.5 * dt * dt);
      }
    }

    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = wide[t] * gate[t];
    normalize_rms(x);
    out.push_back(to_segment(x, fs));
  }
  return out;
}

double lambda_for_snr(const Segment& clean, const Segment& artifact,
                      double snr_db) {
  const double artifact_rms = artifact.rms();
  if (artifact_rms <= 0.0)
    throw MetricDomainError("lambda_for_snr: zero-power artifact");
  return clean.rms() / (artifact_rms * std::pow(10.0, snr_db / 20.0));
}

double measured_input_snr_db(const Segment& clean, const Segment& artifact,
                             double lambda) {
  const double clean_power = segment_power(clean);
  const double noise_power = lambda * lambda * segment_power(artifact);
  return 10.0 * std::log10(clean_power / noise_power);
}

MixRecord mix(const Segment& clean, const Segment& artifact, double lambda) {
  if (clean.length() != artifact.length())
    throw ShapeError("mix: clean length " + std::to_string(clean.length()) +
                     " != artifact length " + std::to_string(artifact.length()));
  if (clean.sample_rate_hz != artifact.sample_rate_hz)
    throw ShapeError("mix: sample rates differ");

  MixRecord rec;
  rec.clean = clean;
  rec.artifact = artifact;
  rec.lambda = lambda;
  rec.contaminated.sample_rate_hz = clean.sample_rate_hz;
  rec.contaminated.samples.resize(clean.samples.size());
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    rec.contaminated.samples[i] = static_cast<float>(
        static_cast<double>(clean.samples[i]) +
        lambda * static_cast<double>(artifact.samples[i]));
  }
  rec.snr_db = measured_input_snr_db(clean, artifact, lambda);
  return rec;
}

DatasetSplit make_dataset(const DatasetParams& params) {
  if (params.count < 10)
    throw ConfigError("make_dataset: count " + std::to_string(params.count) +
                      " < 10, split degenerates");
  if (params.snr_min_db > params.snr_max_db)
    throw ConfigError("make_dataset: snr_min_db > snr_max_db");

  const auto clean = gen_clean_eeg(params.count, params.segment_len,
                                   params.sample_rate_hz, params.seed);
  std::vector<Segment> eog, emg;
  if (params.artifact != ArtifactKind::Emg)
    eog = gen_eog(params.count, params.segment_len, params.sample_rate_hz,
                  params.seed);
  if (params.artifact != ArtifactKind::Eog)
    emg = gen_emg(params.count, params.segment_len, params.sample_rate_hz,
                  params.seed);

  DatasetSplit split;
  const int n_train = params.count * 8 / 10;
  const int n_val = params.count / 10;

  for (int i = 0; i < params.count; ++i) {
    Rng rng(derive_seed(params.seed, kMixStream) ^
            static_cast<std::uint64_t>(i));
    const int snr = rng.uniform_int(params.snr_min_db, params.snr_max_db);

    Segment artifact;
    switch (params.artifact) {
      case ArtifactKind::Eog: artifact = eog[static_cast<std::size_t>(i)]; break;
      case ArtifactKind::Emg: artifact = emg[static_cast<std::size_t>(i)]; break;
      case ArtifactKind::Both: {
        // equal pre-mix RMS; both generators emit unit RMS
        const Segment& a = eog[static_cast<std::size_t>(i)];
        const Segment& b = emg[static_cast<std::size_t>(i)];
        artifact.sample_rate_hz = a.sample_rate_hz;
        artifact.samples.resize(a.samples.size());
        for (std::size_t t = 0; t < a.samples.size(); ++t)
          artifact.samples[t] = a.samples[t] + b.samples[t];
        break;
      }
    }

    const double lambda =
        lambda_for_snr(clean[static_cast<std::size_t>(i)], artifact, snr);
    MixRecord rec = mix(clean[static_cast<std::size_t>(i)], artifact, lambda);
    rec.snr_db = snr;

    if (i < n_train) {
      split.train.push_back(std::move(rec));
    } else if (i < n_train + n_val) {
      split.val.push_back(std::move(rec));
    } else {
      split.test.push_back(std::move(rec));
    }
  }
  return split;
}

namespace {

constexpr char kSegmentMagic[4] = {'E', 'E', 'G', 'S'};
constexpr std::uint32_t kSegmentVersion = 1;

void write_raw(std::ofstream& f, const void* p, std::size_t n) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::ifstream& f, void* p, std::size_t n, const char* what) {
  f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (f.gcount() != static_cast<std::streamsize>(n))
    throw IoError(IoErrorKind::Truncated,
                  std::string("segment file truncated reading ") + what);
}

}  // namespace

void write_segments(const std::string& path,
                    const std::vector<Segment>& segments) {
  std::uint32_t segment_len = 0;
  float fs = 0.f;
  if (!segments.empty()) {
    segment_len = static_cast<std::uint32_t>(segments[0].length());
    fs = segments[0].sample_rate_hz;
    for (std::size_t i = 1; i < segments.size(); ++i) {
      if (static_cast<std::uint32_t>(segments[i].length()) != segment_len)
        throw ShapeError("write_segments: segment " + std::to_string(i) +
                         " length " + std::to_string(segments[i].length()) +
                         " != " + std::to_string(segment_len));
      if (segments[i].sample_rate_hz != fs)
        throw ShapeError("write_segments: segment " + std::to_string(i) +
                         " sample rate differs");
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(IoErrorKind::OpenFailed, "cannot open " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(segments.size());
  write_raw(f, kSegmentMagic, 4);
  write_raw(f, &kSegmentVersion, 4);
  write_raw(f, &n, 4);
  write_raw(f, &segment_len, 4);
  write_raw(f, &fs, 4);
  for (const Segment& s : segments)
    write_raw(f, s.samples.data(), s.samples.size() * sizeof(float));
  if (!f) throw IoError(IoErrorKind::WriteFailed, "write failed: " + path);
}

std::vector<Segment> read_segments(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError(IoErrorKind::OpenFailed, "cannot open " + path);
  const auto file_size = static_cast<std::uint64_t>(f.tellg());
  f.seekg(0);

  char magic[4];
  read_raw(f, magic, 4, "magic");
  if (std::memcmp(magic, kSegmentMagic, 4) != 0)
    throw IoError(IoErrorKind::BadMagic, path + ": bad magic");
  std::uint32_t version = 0, n = 0, segment_len = 0;
  float fs = 0.f;
  read_raw(f, &version, 4, "version");
  if (version != kSegmentVersion)
    throw IoError(IoErrorKind::BadVersion,
                  path + ": version " + std::to_string(version));
  read_raw(f, &n, 4, "segment count");
  read_raw(f, &segment_len, 4, "segment length");
  read_raw(f, &fs, 4, "sample rate");

  // validate the header against the actual size before allocating
  const std::uint64_t payload =
      static_cast<std::uint64_t>(n) * segment_len * sizeof(float);
  if (file_size < 20 + payload)
    throw IoError(IoErrorKind::Truncated,
                  path + ": " + std::to_string(file_size) + " bytes for " +
                      std::to_string(n) + " segments of " +
                      std::to_string(segment_len));
  if (file_size > 20 + payload)
    throw IoError(IoErrorKind::BadValue,
                  path + ": trailing bytes after the sample payload");

  std::vector<Segment> out(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    out[i].sample_rate_hz = fs;
    out[i].samples.resize(segment_len);
    if (segment_len)
      read_raw(f, out[i].samples.data(), segment_len * sizeof(float),
               "samples");
  }
  return out;
}

std::vector<Segment> read_segments_csv(const std::string& path, double fs) {
  std::ifstream f(path);
  if (!f) throw IoError(IoErrorKind::OpenFailed, "cannot open " + path);
  std::vector<Segment> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty()) continue;
    Segment s;
    s.sample_rate_hz = static_cast<float>(fs);
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        s.samples.push_back(std::stof(cell));
      } catch (const std::exception&) {
        throw IoError(IoErrorKind::BadValue,
                      path + ": row " + std::to_string(row) +
                          ": bad value '" + cell + "'");
      }
    }
    if (!out.empty() && out[0].length() != s.length())
      throw IoError(IoErrorKind::BadValue,
                    path + ": row " + std::to_string(row) +
                        " length differs from row 1");
    out.push_back(std::move(s));
  }
  return out;
}

Tensor<float> tensor_from_segment(const Segment& s) {
  Tensor<float> t({1, s.length()});
  std::copy(s.samples.begin(), s.samples.end(), t.values.begin());
  return t;
}

Segment segment_from_tensor(const Tensor<float>& t, float fs) {
  if (t.rank() != 2 || t.dim(0) != 1)
    throw ShapeError("segment_from_tensor: shape " + t.shape_str() +
                     ", want [1 x T]");
  Segment s;
  s.sample_rate_hz = fs;
  s.samples.assign(t.values.begin(), t.values.end());
  return s;
}

}  // namespace dtp
