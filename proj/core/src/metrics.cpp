#include "dtpnet/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dtp {

namespace {

void check_lengths(const Segment& a, const Segment& b, const char* op) {
  if (a.length() != b.length())
    throw ShapeError(std::string(op) + ": lengths " +
                     std::to_string(a.length()) + " != " +
                     std::to_string(b.length()));
  if (a.length() == 0) throw ShapeError(std::string(op) + ": empty segments");
}

double rms_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double rms_of(const std::vector<double>& a) {
  double sum = 0.0;
  for (double v : a) sum += v * v;
  return std::sqrt(sum / static_cast<double>(a.size()));
}

std::vector<double> widen(const Segment& s) {
  return std::vector<double>(s.samples.begin(), s.samples.end());
}

}  // namespace

double snr_db(const Segment& ground_truth, const Segment& estimate) {
  check_lengths(ground_truth, estimate, "snr_db");
  double est_power = 0.0, err_power = 0.0;
  for (int i = 0; i < estimate.length(); ++i) {
    const double u = estimate.samples[static_cast<std::size_t>(i)];
    const double g = ground_truth.samples[static_cast<std::size_t>(i)];
    est_power += u * u;
    err_power += (u - g) * (u - g);
  }
  if (est_power <= 0.0) return -std::numeric_limits<double>::infinity();
  if (err_power <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(est_power / err_power);
}

double rrmse_t(const Segment& ground_truth, const Segment& estimate) {
  return rrmse_t(ground_truth, estimate, ground_truth);
}

double rrmse_t(const Segment& ground_truth, const Segment& estimate,
               const Segment& denominator_reference) {
  check_lengths(ground_truth, estimate, "rrmse_t");
  check_lengths(ground_truth, denominator_reference, "rrmse_t");
  const double denom = denominator_reference.rms();
  if (denom <= 0.0)
    throw MetricDomainError("rrmse_t: zero-power denominator signal");
  return rms_diff(widen(ground_truth), widen(estimate)) / denom;
}

double rrmse_s(const Segment& ground_truth, const Segment& estimate,
               const PsdParams& params) {
  return rrmse_s(ground_truth, estimate, ground_truth, params);
}

double rrmse_s(const Segment& ground_truth, const Segment& estimate,
               const Segment& denominator_reference, const PsdParams& params) {
  check_lengths(ground_truth, estimate, "rrmse_s");
  check_lengths(ground_truth, denominator_reference, "rrmse_s");
  const Psd a = psd_welch(ground_truth, params);
  const Psd b = psd_welch(estimate, params);
  const Psd ref = psd_welch(denominator_reference, params);
  const double denom = rms_of(ref.power);
  if (denom <= 0.0)
    throw MetricDomainError("rrmse_s: zero-power denominator signal");
  return rms_diff(a.power, b.power) / denom;
}

double cc(const Segment& ground_truth, const Segment& estimate) {
  check_lengths(ground_truth, estimate, "cc");
  const int n = ground_truth.length();
  double mean_g = 0.0, mean_u = 0.0;
  for (int i = 0; i < n; ++i) {
    mean_g += ground_truth.samples[static_cast<std::size_t>(i)];
    mean_u += estimate.samples[static_cast<std::size_t>(i)];
  }
  mean_g /= n;
  mean_u /= n;
  double cov = 0.0, var_g = 0.0, var_u = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dg =
        ground_truth.samples[static_cast<std::size_t>(i)] - mean_g;
    const double du = estimate.samples[static_cast<std::size_t>(i)] - mean_u;
    cov += dg * du;
    var_g += dg * dg;
    var_u += du * du;
  }
  if (var_g <= 0.0 || var_u <= 0.0)
    throw MetricDomainError("cc: zero-variance signal");
  return cov / std::sqrt(var_g * var_u);
}

namespace {

void append_fields(std::ostringstream& os, double rrmse_t_v, double rrmse_s_v,
                   double cc_v, double before, double after, double delta,
                   int count) {
  os << "\"rrmse_t\": " << rrmse_t_v << ", \"rrmse_s\": " << rrmse_s_v
     << ", \"cc\": " << cc_v << ", \"snr_before_db\": " << before
     << ", \"snr_after_db\": " << after << ", \"delta_snr_db\": " << delta
     << ", \"count\": " << count;
}

}  // namespace

std::string report_to_json(const MetricReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "{";
  append_fields(os, report.rrmse_t, report.rrmse_s, report.cc,
                report.snr_before_db, report.snr_after_db,
                report.delta_snr_db, report.count);
  os << ", \"per_snr\": [";
  for (std::size_t i = 0; i < report.per_snr.size(); ++i) {
    const SnrGroup& g = report.per_snr[i];
    if (i) os << ", ";
    os << "{\"snr_db\": " << g.snr_db << ", ";
    append_fields(os, g.rrmse_t, g.rrmse_s, g.cc, g.snr_before_db,
                  g.snr_after_db, g.delta_snr_db, g.count);
    os << "}";
  }
  os << "]}";
  return os.str();
}

ClassMetrics confusion_metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0)
    throw MetricDomainError("confusion_metrics: negative count");
  if (c.total() == 0)
    throw MetricDomainError("confusion_metrics: all counts zero");

  const double tp = static_cast<double>(c.tp);
  const double tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp);
  const double fn = static_cast<double>(c.fn);

  ClassMetrics m;
  if (c.tp + c.fn > 0) m.recall = tp / (tp + fn);
  if (c.tp + c.fp > 0) m.precision = tp / (tp + fp);
  if (m.recall && m.precision && *m.recall + *m.precision > 0.0)
    m.f1 = 2.0 * *m.recall * *m.precision / (*m.recall + *m.precision);
  const double mcc_denom =
      (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (mcc_denom > 0.0)
    m.mcc = (tp * tn - fp * fn) / std::sqrt(mcc_denom);
  const double kappa_denom = (tp + fp) * (fp + tn) + (tp + fn) * (fn + tn);
  if (kappa_denom > 0.0)
    m.kappa = 2.0 * (tp * tn - fn * fp) / kappa_denom;
  m.accuracy = (tp + tn) / (tp + fp + tn + fn);
  return m;
}

std::vector<ConfusionCounts> confusion_from_labels(
    const std::vector<int>& predicted, const std::vector<int>& actual,
    int num_classes) {
  if (predicted.size() != actual.size())
    throw ShapeError("confusion_from_labels: " +
                     std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(actual.size()) + " labels");
  if (num_classes < 2)
    throw ConfigError("confusion_from_labels: num_classes " +
                      std::to_string(num_classes));

  std::vector<ConfusionCounts> counts(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i];
    const int a = actual[i];
    if (p < 0 || p >= num_classes || a < 0 || a >= num_classes)
      throw MetricDomainError("confusion_from_labels: label out of range at " +
                              std::to_string(i));
    for (int cls = 0; cls < num_classes; ++cls) {
      ConfusionCounts& c = counts[static_cast<std::size_t>(cls)];
      const bool pred_pos = p == cls;
      const bool actual_pos = a == cls;
      if (pred_pos && actual_pos) ++c.tp;
      else if (pred_pos && !actual_pos) ++c.fp;
      else if (!pred_pos && actual_pos) ++c.fn;
      else ++c.tn;
    }
  }
  return counts;
}

ClassMetrics macro_average(const std::vector<ClassMetrics>& per_class) {
  ClassMetrics out;
  auto fold = [&](std::optional<double> ClassMetrics::* field) {
    double sum = 0.0;
    int n = 0;
    for (const ClassMetrics& m : per_class) {
      if (m.*field) {
        sum += (m.*field).value();
        ++n;
      }
    }
    if (n > 0) out.*field = sum / n;
  };
  fold(&ClassMetrics::recall);
  fold(&ClassMetrics::precision);
  fold(&ClassMetrics::f1);
  fold(&ClassMetrics::mcc);
  fold(&ClassMetrics::kappa);
  fold(&ClassMetrics::accuracy);
  return out;
}

}  // namespace dtp
