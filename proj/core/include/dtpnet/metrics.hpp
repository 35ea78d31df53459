#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtpnet/dsp.hpp"
#include "dtpnet/signal.hpp"

namespace dtp {

// 10*log10(||estimate||^2 / ||estimate - ground_truth||^2) for one segment.
// estimate == ground_truth -> +infinity, zero-power estimate -> -infinity.
double snr_db(const Segment& ground_truth, const Segment& estimate);

// RMS(x_g - estimate) / RMS(x_g). The overload taking a reference signal
// implements the variant where the denominator is the raw network input
// instead of the ground truth.
double rrmse_t(const Segment& ground_truth, const Segment& estimate);
double rrmse_t(const Segment& ground_truth, const Segment& estimate,
               const Segment& denominator_reference);

// Same ratio between the Welch PSDs of the two signals.
double rrmse_s(const Segment& ground_truth, const Segment& estimate,
               const PsdParams& params = {});
double rrmse_s(const Segment& ground_truth, const Segment& estimate,
               const Segment& denominator_reference,
               const PsdParams& params = {});

// Pearson correlation, mean removed.
double cc(const Segment& ground_truth, const Segment& estimate);

struct SnrGroup {
  int snr_db = 0;  // requested input SNR level
  int count = 0;
  double rrmse_t = 0.0;
  double rrmse_s = 0.0;
  double cc = 0.0;
  double snr_before_db = 0.0;
  double snr_after_db = 0.0;
  double delta_snr_db = 0.0;
};

struct MetricReport {
  int count = 0;
  double rrmse_t = 0.0;
  double rrmse_s = 0.0;
  double cc = 0.0;
  double snr_before_db = 0.0;
  double snr_after_db = 0.0;
  double delta_snr_db = 0.0;
  std::vector<SnrGroup> per_snr;
};

std::string report_to_json(const MetricReport& report);

struct ConfusionCounts {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::int64_t total() const { return tp + tn + fp + fn; }
};

// A metric with a zero denominator is undefined, not zero.
struct ClassMetrics {
  std::optional<double> recall, precision, f1, mcc, kappa, accuracy;
};

ClassMetrics confusion_metrics(const ConfusionCounts& counts);

// one-vs-rest counts per class from raw label pairs
std::vector<ConfusionCounts> confusion_from_labels(
    const std::vector<int>& predicted, const std::vector<int>& actual,
    int num_classes);

// macro average over classes where the metric is defined
ClassMetrics macro_average(const std::vector<ClassMetrics>& per_class);

}  // namespace dtp
