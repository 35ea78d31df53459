#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dtpnet/dsp.hpp"
#include "dtpnet/signal.hpp"
#include "support.hpp"

using namespace dtp;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("clean EEG segments are unit RMS, low-frequency, reproducible") {
  const auto segs = gen_clean_eeg(8, 1024, 256.0, 42);
  REQUIRE(segs.size() == 8);
  for (const Segment& s : segs) {
    CHECK(s.rms() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(band_power_fraction(psd_welch(s), 0.0, 30.0) >= 0.90);
  }
  const auto again = gen_clean_eeg(8, 1024, 256.0, 42);
  for (std::size_t i = 0; i < segs.size(); ++i)
    CHECK(dtptest::bit_equal(segs[i].samples, again[i].samples));
  const auto other = gen_clean_eeg(8, 1024, 256.0, 43);
  CHECK_FALSE(dtptest::bit_equal(segs[0].samples, other[0].samples));
}

TEST_CASE("EOG power sits in 0.5..5 Hz") {
  const auto segs = gen_eog(8, 2048, 256.0, 7);
  for (const Segment& s : segs) {
    CHECK(s.rms() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(band_power_fraction(psd_welch(s), 0.5, 5.0) >= 0.90);
  }
}

TEST_CASE("EMG power sits above 20 Hz") {
  const auto segs = gen_emg(8, 2048, 256.0, 7);
  for (const Segment& s : segs) {
    CHECK(s.rms() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(band_power_fraction(psd_welch(s), 20.0, 128.0) >= 0.80);
  }
}

TEST_CASE("generator parameter validation") {
  CHECK_THROWS_AS(gen_clean_eeg(0, 512, 256.0, 1), ConfigError);
  CHECK_THROWS_AS(gen_clean_eeg(1, 512, 32.0, 1), ConfigError);
  CHECK_THROWS_AS(gen_clean_eeg(1, 16, 256.0, 1), ConfigError);
}

TEST_CASE("lambda_for_snr closed form") {
  const auto clean = gen_clean_eeg(1, 512, 256.0, 1);
  const auto artifact = gen_eog(1, 512, 256.0, 2);
  // both unit RMS
  CHECK(lambda_for_snr(clean[0], artifact[0], 0.0) ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(lambda_for_snr(clean[0], artifact[0], -20.0) ==
        doctest::Approx(10.0).epsilon(1e-6));

  Segment clean2 = clean[0];
  for (float& v : clean2.samples) v *= 2.f;
  CHECK(lambda_for_snr(clean2, artifact[0], 6.0206) ==
        doctest::Approx(1.0).epsilon(1e-4));

  Segment dead = artifact[0];
  for (float& v : dead.samples) v = 0.f;
  CHECK_THROWS_AS(lambda_for_snr(clean[0], dead, 0.0), MetricDomainError);
}

TEST_CASE("mix trivial cases and the element-wise invariant") {
  const auto clean = gen_clean_eeg(1, 512, 256.0, 5)[0];
  const auto artifact = gen_eog(1, 512, 256.0, 6)[0];

  const MixRecord zero = mix(clean, artifact, 0.0);
  CHECK(dtptest::bit_equal(zero.contaminated.samples, clean.samples));

  const MixRecord self = mix(clean, clean, 1.0);
  for (std::size_t i = 0; i < clean.samples.size(); ++i)
    CHECK(self.contaminated.samples[i] ==
          doctest::Approx(2.0 * clean.samples[i]));

  const MixRecord rec = mix(clean, artifact, 0.7);
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    const float expect = static_cast<float>(
        static_cast<double>(clean.samples[i]) +
        0.7 * static_cast<double>(artifact.samples[i]));
    CHECK(rec.contaminated.samples[i] == expect);
  }
}

TEST_CASE("measured SNR equals the requested level within 0.01 dB") {
  const int n = 200;
  const auto clean = gen_clean_eeg(n, 512, 256.0, 11);
  const auto eog = gen_eog(n, 512, 256.0, 12);
  Rng rng(13);
  for (int i = 0; i < n; ++i) {
    const double snr = rng.uniform_int(-7, 2);
    const double lambda = lambda_for_snr(clean[i], eog[i], snr);
    const MixRecord rec = mix(clean[i], eog[i], lambda);
    CHECK(std::fabs(measured_input_snr_db(rec.clean, rec.artifact,
                                          rec.lambda) -
                    snr) < 0.01);
  }
}

TEST_CASE("mixing is linear in lambda") {
  const auto clean = gen_clean_eeg(1, 512, 256.0, 21)[0];
  const auto artifact = gen_emg(1, 512, 256.0, 22)[0];
  const double l1 = 0.4, l2 = 1.1;
  const MixRecord sum = mix(clean, artifact, l1 + l2);
  const MixRecord first = mix(clean, artifact, l1);
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    const double expect = static_cast<double>(first.contaminated.samples[i]) +
                          l2 * static_cast<double>(artifact.samples[i]);
    CHECK(sum.contaminated.samples[i] ==
          doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("make_dataset split sizes, SNR range, reproducibility") {
  DatasetParams params;
  params.count = 100;
  params.segment_len = 512;
  params.sample_rate_hz = 256.0;
  params.artifact = ArtifactKind::Eog;
  params.seed = 33;
  const DatasetSplit split = make_dataset(params);
  CHECK(split.train.size() == 80);
  CHECK(split.val.size() == 10);
  CHECK(split.test.size() == 10);

  auto check_levels = [](const std::vector<MixRecord>& records) {
    for (const MixRecord& r : records) {
      CHECK(r.snr_db >= -7.0);
      CHECK(r.snr_db <= 2.0);
      CHECK(r.snr_db == std::floor(r.snr_db));  // integer levels
      CHECK(std::fabs(measured_input_snr_db(r.clean, r.artifact, r.lambda) -
                      r.snr_db) < 0.01);
    }
  };
  check_levels(split.train);
  check_levels(split.val);
  check_levels(split.test);

  const DatasetSplit again = make_dataset(params);
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    CHECK(dtptest::bit_equal(split.train[i].contaminated.samples,
                             again.train[i].contaminated.samples));
  }

  DatasetParams tiny = params;
  tiny.count = 9;
  CHECK_THROWS_AS(make_dataset(tiny), ConfigError);
}

TEST_CASE("both-kind artifacts stack one EOG and one EMG") {
  DatasetParams params;
  params.count = 10;
  params.segment_len = 512;
  params.sample_rate_hz = 256.0;
  params.artifact = ArtifactKind::Both;
  params.seed = 44;
  const DatasetSplit split = make_dataset(params);
  const auto eog = gen_eog(10, 512, 256.0, 44);
  const auto emg = gen_emg(10, 512, 256.0, 44);
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    const MixRecord& r = split.train[i];
    for (std::size_t t = 0; t < r.artifact.samples.size(); ++t) {
      CHECK(r.artifact.samples[t] ==
            eog[i].samples[t] + emg[i].samples[t]);
    }
  }
}

TEST_CASE("segment file round trip is bit exact") {
  const auto segs = gen_clean_eeg(5, 256, 256.0, 55);
  const std::string path = temp_path("dtp_segments_test.eegs");
  write_segments(path, segs);
  const auto back = read_segments(path);
  REQUIRE(back.size() == segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK(back[i].sample_rate_hz == segs[i].sample_rate_hz);
    CHECK(dtptest::bit_equal(back[i].samples, segs[i].samples));
  }
  std::filesystem::remove(path);
}

TEST_CASE("segment file error taxonomy") {
  const std::string path = temp_path("dtp_segments_err.eegs");
  const auto segs = gen_clean_eeg(2, 128, 256.0, 66);
  write_segments(path, segs);

  SUBCASE("truncation") {
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 100);
    try {
      read_segments(path);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.kind() == IoErrorKind::Truncated);
    }
  }
  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOPE", 4);
    f.close();
    try {
      read_segments(path);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.kind() == IoErrorKind::BadMagic);
    }
  }
  SUBCASE("bad version") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const std::uint32_t v = 9;
    f.write(reinterpret_cast<const char*>(&v), 4);
    f.close();
    try {
      read_segments(path);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.kind() == IoErrorKind::BadVersion);
    }
  }
  SUBCASE("trailing garbage") {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    f.write("junk", 4);
    f.close();
    try {
      read_segments(path);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.kind() == IoErrorKind::BadValue);
    }
  }
  SUBCASE("absurd segment count fails before allocating") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t huge = 0xffffffffu;
    f.write(reinterpret_cast<const char*>(&huge), 4);
    f.close();
    try {
      read_segments(path);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.kind() == IoErrorKind::Truncated);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("empty segment list is a valid file") {
  const std::string path = temp_path("dtp_segments_empty.eegs");
  write_segments(path, {});
  CHECK(read_segments(path).empty());
  std::filesystem::remove(path);
}

TEST_CASE("mismatched lengths cannot share a file") {
  std::vector<Segment> bad(2);
  bad[0].sample_rate_hz = bad[1].sample_rate_hz = 100.f;
  bad[0].samples.assign(16, 0.f);
  bad[1].samples.assign(17, 0.f);
  CHECK_THROWS_AS(write_segments(temp_path("dtp_bad.eegs"), bad), ShapeError);
}

TEST_CASE("CSV import") {
  const std::string path = temp_path("dtp_segments.csv");
  {
    std::ofstream f(path);
    f << "1.5,-2.25,3\n0,0.5,1\n";
  }
  const auto segs = read_segments_csv(path, 128.0);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].samples == std::vector<float>{1.5f, -2.25f, 3.f});
  CHECK(segs[1].sample_rate_hz == 128.f);

  {
    std::ofstream f(path);
    f << "1,2\n3,oops\n";
  }
  CHECK_THROWS_AS(read_segments_csv(path, 128.0), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("segment/tensor adapters") {
  Segment s;
  s.sample_rate_hz = 100.f;
  s.samples = {1.f, 2.f, 3.f};
  const Tensor<float> t = tensor_from_segment(s);
  CHECK(t.shape == std::vector<int>{1, 3});
  const Segment back = segment_from_tensor(t, 100.f);
  CHECK(dtptest::bit_equal(back.samples, s.samples));
}
