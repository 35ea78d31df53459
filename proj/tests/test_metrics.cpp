#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "dtpnet/metrics.hpp"
#include "support.hpp"

using namespace dtp;

namespace {

constexpr double kPi = 3.14159265358979323846;

// O(n^2) direct transform, the oracle for the fft
std::vector<std::complex<double>> naive_dft(
    const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * kPi * static_cast<double>(k * t) /
                           static_cast<double>(n);
      sum += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = sum;
  }
  return out;
}

Segment make_segment(std::vector<float> samples, float fs = 256.f) {
  Segment s;
  s.sample_rate_hz = fs;
  s.samples = std::move(samples);
  return s;
}

Segment sine_segment(double freq, double fs, int n, double amp = 1.0) {
  Segment s;
  s.sample_rate_hz = static_cast<float>(fs);
  s.samples.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    s.samples[static_cast<std::size_t>(i)] =
        static_cast<float>(amp * std::sin(2.0 * kPi * freq * i / fs));
  return s;
}

}  // namespace

TEST_CASE("fft impulse and inverse identity") {
  std::vector<std::complex<double>> x = {{1, 0}, {0, 0}, {0, 0}, {0, 0}};
  fft(x);
  for (const auto& c : x) {
    CHECK(c.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.imag() == doctest::Approx(0.0).epsilon(1e-12));
  }

  Rng rng(1);
  std::vector<std::complex<double>> y(64);
  for (auto& c : y) c = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto z = y;
  fft(z);
  fft(z, true);
  for (std::size_t i = 0; i < y.size(); ++i)
    CHECK(std::abs(z[i] - y[i]) < 1e-9);

  std::vector<std::complex<double>> bad(6);
  CHECK_THROWS_AS(fft(bad), ShapeError);
}

TEST_CASE("fft matches the naive DFT on every power-of-two length") {
  Rng rng(2);
  for (std::size_t n = 2; n <= 1024; n *= 2) {
    std::vector<std::complex<double>> x(n);
    for (auto& c : x) c = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto direct = naive_dft(x);
    auto fast = x;
    fft(fast);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(fast[i] - direct[i]));
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("welch PSD peaks at the injected frequency") {
  // 32 Hz on a 256-bin Hann window at fs = 256: exact bin center
  const Segment s = sine_segment(32.0, 256.0, 2048);
  const Psd psd = psd_welch(s);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < psd.power.size(); ++k)
    if (psd.power[k] > psd.power[peak]) peak = k;
  CHECK(psd.freqs[peak] == doctest::Approx(32.0).epsilon(1e-9));
}

TEST_CASE("welch PSD satisfies Parseval for white noise") {
  Rng rng(3);
  Segment s;
  s.sample_rate_hz = 256.f;
  s.samples.resize(8192);
  double mean_square = 0.0;
  for (auto& v : s.samples) {
    v = static_cast<float>(rng.normal());
    mean_square += static_cast<double>(v) * v;
  }
  mean_square /= static_cast<double>(s.samples.size());

  const Psd psd = psd_welch(s);
  const double df = psd.freqs[1] - psd.freqs[0];
  double integral = 0.0;
  for (double p : psd.power) integral += p * df;
  CHECK(integral == doctest::Approx(mean_square).epsilon(0.05));
}

TEST_CASE("welch PSD of silence is zero and seg_len is validated") {
  Segment s = make_segment(std::vector<float>(512, 0.f));
  const Psd psd = psd_welch(s);
  for (double p : psd.power) CHECK(p == 0.0);

  PsdParams params;
  params.seg_len = 1024;
  CHECK_THROWS_AS(psd_welch(s, params), ShapeError);
}

TEST_CASE("welch PSD stays calibrated at other overlaps") {
  Rng rng(11);
  Segment s;
  s.sample_rate_hz = 256.f;
  s.samples.resize(8192);
  double mean_square = 0.0;
  for (auto& v : s.samples) {
    v = static_cast<float>(rng.normal());
    mean_square += static_cast<double>(v) * v;
  }
  mean_square /= static_cast<double>(s.samples.size());

  for (double overlap : {0.0, 0.75}) {
    PsdParams params;
    params.overlap_fraction = overlap;
    const Psd psd = psd_welch(s, params);
    const double df = psd.freqs[1] - psd.freqs[0];
    double integral = 0.0;
    for (double p : psd.power) integral += p * df;
    CHECK(integral == doctest::Approx(mean_square).epsilon(0.05));
  }
}

TEST_CASE("snr_db cases") {
  Rng rng(4);
  Segment truth;
  truth.sample_rate_hz = 256.f;
  truth.samples.resize(1024);
  for (auto& v : truth.samples) v = static_cast<float>(rng.normal());

  // u = x_g + s*e with ||s*e|| = ||u||/10 -> 20 dB; s comes from the
  // quadratic 99 s^2 ||e||^2 - 2 s <g,e> - ||g||^2 = 0
  Segment noisy = truth;
  std::vector<double> e(noisy.samples.size());
  double ee = 0.0, ge = 0.0, gg = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = rng.normal();
    ee += e[i] * e[i];
    ge += static_cast<double>(truth.samples[i]) * e[i];
    gg += static_cast<double>(truth.samples[i]) * truth.samples[i];
  }
  const double scale = (ge + std::sqrt(ge * ge + 99.0 * ee * gg)) / (99.0 * ee);
  for (std::size_t i = 0; i < e.size(); ++i)
    noisy.samples[i] = static_cast<float>(truth.samples[i] + scale * e[i]);
  CHECK(snr_db(truth, noisy) == doctest::Approx(20.0).epsilon(1e-3));

  CHECK(std::isinf(snr_db(truth, truth)));
  CHECK(snr_db(truth, truth) > 0);

  Segment silent = make_segment(std::vector<float>(1024, 0.f));
  CHECK(snr_db(truth, silent) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("snr_db decreases as independent noise grows") {
  Rng rng(5);
  Segment truth;
  truth.sample_rate_hz = 256.f;
  truth.samples.resize(512);
  for (auto& v : truth.samples) v = static_cast<float>(rng.normal());
  std::vector<double> noise(truth.samples.size());
  for (auto& v : noise) v = rng.normal();

  double last = std::numeric_limits<double>::infinity();
  for (double gain : {0.01, 0.1, 0.5, 1.0, 4.0}) {
    Segment u = truth;
    for (std::size_t i = 0; i < u.samples.size(); ++i)
      u.samples[i] = static_cast<float>(truth.samples[i] + gain * noise[i]);
    const double snr = snr_db(truth, u);
    CHECK(snr < last);
    last = snr;
  }
}

TEST_CASE("rrmse fixed points") {
  Rng rng(6);
  Segment truth;
  truth.sample_rate_hz = 256.f;
  truth.samples.resize(512);
  for (auto& v : truth.samples) v = static_cast<float>(rng.normal());

  CHECK(rrmse_t(truth, truth) == 0.0);
  CHECK(rrmse_s(truth, truth) == 0.0);

  Segment zero = make_segment(std::vector<float>(512, 0.f));
  CHECK(rrmse_t(truth, zero) == doctest::Approx(1.0).epsilon(1e-9));

  Segment twice = truth;
  for (auto& v : twice.samples) v *= 2.f;
  CHECK(rrmse_t(truth, twice) == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(rrmse_t(zero, truth), MetricDomainError);
}

TEST_CASE("rrmse_t error scale equivariance") {
  Rng rng(7);
  Segment truth;
  truth.sample_rate_hz = 256.f;
  truth.samples.resize(512);
  for (auto& v : truth.samples) v = static_cast<float>(rng.normal());
  std::vector<double> e(truth.samples.size());
  for (auto& v : e) v = rng.normal();

  Segment one = truth, two = truth;
  for (std::size_t i = 0; i < e.size(); ++i) {
    one.samples[i] = static_cast<float>(truth.samples[i] + e[i]);
    two.samples[i] = static_cast<float>(truth.samples[i] + 2.0 * e[i]);
  }
  CHECK(rrmse_t(truth, two) ==
        doctest::Approx(2.0 * rrmse_t(truth, one)).epsilon(1e-5));
}

TEST_CASE("rrmse denominator variant uses the provided reference") {
  Segment truth = make_segment({1.f, -1.f, 1.f, -1.f});
  Segment est = make_segment({0.f, 0.f, 0.f, 0.f});
  Segment loud = make_segment({2.f, -2.f, 2.f, -2.f});
  CHECK(rrmse_t(truth, est) == doctest::Approx(1.0));
  CHECK(rrmse_t(truth, est, loud) == doctest::Approx(0.5));

  // spectral variant: PSD scales quadratically with amplitude
  Segment s_truth = sine_segment(16.0, 128.0, 512);
  Segment s_est = sine_segment(16.0, 128.0, 512, 0.0);
  Segment s_loud = sine_segment(16.0, 128.0, 512, 2.0);
  const double vs_truth = rrmse_s(s_truth, s_est);
  const double vs_loud = rrmse_s(s_truth, s_est, s_loud);
  CHECK(vs_truth == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(vs_loud == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("cc fixed points and affine invariance") {
  Rng rng(8);
  Segment truth;
  truth.sample_rate_hz = 256.f;
  truth.samples.resize(512);
  for (auto& v : truth.samples) v = static_cast<float>(rng.normal());

  CHECK(cc(truth, truth) == doctest::Approx(1.0).epsilon(1e-9));

  Segment negated = truth;
  for (auto& v : negated.samples) v = -v;
  CHECK(cc(truth, negated) == doctest::Approx(-1.0).epsilon(1e-9));

  Segment affine = truth;
  for (auto& v : affine.samples) v = 3.f * v + 2.f;
  CHECK(cc(truth, affine) == doctest::Approx(1.0).epsilon(1e-6));

  Segment flat = make_segment(std::vector<float>(512, 1.f));
  CHECK_THROWS_AS(cc(truth, flat), MetricDomainError);
}

TEST_CASE("confusion metrics canonical values") {
  ClassMetrics perfect = confusion_metrics({.tp = 10, .tn = 10, .fp = 0, .fn = 0});
  CHECK(*perfect.recall == 1.0);
  CHECK(*perfect.precision == 1.0);
  CHECK(*perfect.f1 == 1.0);
  CHECK(*perfect.mcc == 1.0);
  CHECK(*perfect.kappa == 1.0);
  CHECK(*perfect.accuracy == 1.0);

  ClassMetrics coin = confusion_metrics({.tp = 25, .tn = 25, .fp = 25, .fn = 25});
  CHECK(*coin.accuracy == doctest::Approx(0.5));
  CHECK(*coin.mcc == doctest::Approx(0.0));
  CHECK(*coin.kappa == doctest::Approx(0.0));

  ClassMetrics rec = confusion_metrics({.tp = 40, .tn = 0, .fp = 5, .fn = 10});
  CHECK(*rec.recall == doctest::Approx(0.8));

  // undefined metrics stay undefined
  ClassMetrics no_pos = confusion_metrics({.tp = 0, .tn = 10, .fp = 0, .fn = 0});
  CHECK_FALSE(no_pos.recall.has_value());
  CHECK_FALSE(no_pos.precision.has_value());
  CHECK(no_pos.accuracy.has_value());

  CHECK_THROWS_AS(confusion_metrics({}), MetricDomainError);
}

TEST_CASE("confusion metrics match a brute-force recount") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int classes = rng.uniform_int(2, 5);
    const int n = rng.uniform_int(20, 100);
    std::vector<int> pred(static_cast<std::size_t>(n)),
        actual(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      pred[static_cast<std::size_t>(i)] = rng.uniform_int(0, classes - 1);
      actual[static_cast<std::size_t>(i)] = rng.uniform_int(0, classes - 1);
    }
    const auto counts = confusion_from_labels(pred, actual, classes);
    for (int cls = 0; cls < classes; ++cls) {
      std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
      for (int i = 0; i < n; ++i) {
        const bool p = pred[static_cast<std::size_t>(i)] == cls;
        const bool a = actual[static_cast<std::size_t>(i)] == cls;
        tp += p && a;
        fp += p && !a;
        fn += !p && a;
        tn += !p && !a;
      }
      const ConfusionCounts& c = counts[static_cast<std::size_t>(cls)];
      CHECK(c.tp == tp);
      CHECK(c.tn == tn);
      CHECK(c.fp == fp);
      CHECK(c.fn == fn);
    }
  }
}

TEST_CASE("macro average skips undefined entries") {
  std::vector<ClassMetrics> per_class(2);
  per_class[0].recall = 1.0;
  per_class[1].recall = 0.5;
  per_class[0].precision = 0.25;  // class 1 precision undefined
  const ClassMetrics avg = macro_average(per_class);
  CHECK(*avg.recall == doctest::Approx(0.75));
  CHECK(*avg.precision == doctest::Approx(0.25));
  CHECK_FALSE(avg.f1.has_value());
}

TEST_CASE("metric report serializes to snake_case JSON") {
  MetricReport report;
  report.count = 2;
  report.rrmse_t = 0.25;
  report.cc = 0.75;
  SnrGroup g;
  g.snr_db = -7;
  g.count = 1;
  report.per_snr.push_back(g);
  const std::string json = report_to_json(report);
  CHECK(json.find("\"rrmse_t\": 0.25") != std::string::npos);
  CHECK(json.find("\"delta_snr_db\"") != std::string::npos);
  CHECK(json.find("\"per_snr\": [{\"snr_db\": -7") != std::string::npos);
}
