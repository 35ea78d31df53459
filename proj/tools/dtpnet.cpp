#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtpnet/metrics.hpp"
#include "dtpnet/model.hpp"
#include "dtpnet/probe.hpp"
#include "dtpnet/rng.hpp"
#include "dtpnet/signal.hpp"
#include "dtpnet/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// exit codes: 0 ok, 2 usage/config, 3 io/format, 4 divergence, 5 metric domain
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitMetric = 5;

struct GlobalOpts {
  std::int64_t seed = -1;  // -1: keep config seeds
  int threads = 0;         // 0: hardware
  bool quiet = false;

  int effective_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
  }
};

std::ostream& info(const GlobalOpts& opts) {
  static std::ostringstream sink;
  if (opts.quiet) {
    sink.str("");
    return sink;
  }
  return std::cout;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw dtp::IoError(dtp::IoErrorKind::OpenFailed, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// one manifest next to every artifact-producing command's outputs
void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::string>& input_paths,
                    const json& params) {
  json m;
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["params"] = params;
  m["inputs"] = json::array();
  for (const std::string& in : input_paths) {
    json entry;
    entry["path"] = in;
    entry["fnv1a64"] = fnv1a64_hex(read_file(in));
    m["inputs"].push_back(entry);
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f)
    throw dtp::IoError(dtp::IoErrorKind::OpenFailed, "cannot open " + path);
  f << m.dump(2) << "\n";
}

dtp::DatasetParams dataset_params_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw dtp::ConfigError(std::string("dataset config: invalid JSON: ") +
                           e.what());
  }
  static const char* known[] = {"count",      "segment_len", "sample_rate_hz",
                                "artifact",   "snr_min_db",  "snr_max_db",
                                "seed"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok)
      throw dtp::ConfigError("dataset config: unknown field '" + key + "'");
  }
  dtp::DatasetParams p;
  if (j.contains("count")) p.count = j["count"].get<int>();
  if (j.contains("segment_len")) p.segment_len = j["segment_len"].get<int>();
  if (j.contains("sample_rate_hz"))
    p.sample_rate_hz = j["sample_rate_hz"].get<double>();
  if (j.contains("artifact"))
    p.artifact = dtp::artifact_kind_from_name(j["artifact"].get<std::string>());
  if (j.contains("snr_min_db")) p.snr_min_db = j["snr_min_db"].get<int>();
  if (j.contains("snr_max_db")) p.snr_max_db = j["snr_max_db"].get<int>();
  if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
  return p;
}

struct TrainSpec {
  dtp::DTPNetConfig model;
  dtp::TrainConfig train;
};

TrainSpec train_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw dtp::ConfigError(std::string("train config: invalid JSON: ") +
                           e.what());
  }
  if (!j.is_object() || !j.contains("model") || !j.contains("train"))
    throw dtp::ConfigError(
        "train config: want an object with 'model' and 'train' sections");
  for (const auto& [key, _] : j.items()) {
    if (key != "model" && key != "train")
      throw dtp::ConfigError("train config: unknown section '" + key + "'");
  }
  TrainSpec spec;
  spec.model = dtp::config_from_json(j["model"].dump());
  spec.train = dtp::train_config_from_json(j["train"].dump());
  return spec;
}

std::vector<dtp::MixRecord> load_records(const std::string& data_dir,
                                         const std::string& split) {
  const std::string clean_path = data_dir + "/" + split + "_clean.eegs";
  const std::string cont_path = data_dir + "/" + split + "_contaminated.eegs";
  const auto clean = dtp::read_segments(clean_path);
  const auto contaminated = dtp::read_segments(cont_path);
  if (clean.size() != contaminated.size())
    throw dtp::IoError(dtp::IoErrorKind::BadValue,
                       split + ": clean and contaminated files disagree on "
                               "segment count");
  std::vector<dtp::MixRecord> records(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    dtp::MixRecord& r = records[i];
    r.clean = clean[i];
    r.contaminated = contaminated[i];
    // the residual is the scaled artifact; keep lambda = 1 for it
    r.artifact.sample_rate_hz = clean[i].sample_rate_hz;
    r.artifact.samples.resize(clean[i].samples.size());
    for (std::size_t t = 0; t < clean[i].samples.size(); ++t)
      r.artifact.samples[t] =
          contaminated[i].samples[t] - clean[i].samples[t];
    r.lambda = 1.0;
    r.snr_db = dtp::measured_input_snr_db(r.clean, r.artifact, 1.0);
  }
  return records;
}

void write_history_csv(const std::string& path,
                       const std::vector<dtp::EpochStats>& history) {
  std::ofstream f(path, std::ios::trunc);
  if (!f)
    throw dtp::IoError(dtp::IoErrorKind::OpenFailed, "cannot open " + path);
  f.precision(10);
  f << "epoch,train_loss,val_loss\n";
  for (const auto& row : history)
    f << row.epoch << "," << row.train_loss << "," << row.val_loss << "\n";
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const GlobalOpts& opts, const std::string& config_path,
            const std::string& out_dir) {
  dtp::DatasetParams params = dataset_params_from_json(read_file(config_path));
  if (opts.seed >= 0) params.seed = static_cast<std::uint64_t>(opts.seed);

  const dtp::DatasetSplit split = dtp::make_dataset(params);
  fs::create_directories(out_dir);

  auto dump = [&](const std::string& name,
                  const std::vector<dtp::MixRecord>& records) {
    std::vector<dtp::Segment> clean, artifact, contaminated;
    for (const auto& r : records) {
      clean.push_back(r.clean);
      artifact.push_back(r.artifact);
      contaminated.push_back(r.contaminated);
    }
    dtp::write_segments(out_dir + "/" + name + "_clean.eegs", clean);
    dtp::write_segments(out_dir + "/" + name + "_artifact.eegs", artifact);
    dtp::write_segments(out_dir + "/" + name + "_contaminated.eegs",
                        contaminated);
  };
  dump("train", split.train);
  dump("val", split.val);
  dump("test", split.test);

  json params_json;
  params_json["count"] = params.count;
  params_json["segment_len"] = params.segment_len;
  params_json["sample_rate_hz"] = params.sample_rate_hz;
  params_json["artifact"] = dtp::artifact_kind_name(params.artifact);
  params_json["snr_min_db"] = params.snr_min_db;
  params_json["snr_max_db"] = params.snr_max_db;
  params_json["seed"] = params.seed;
  write_manifest(out_dir + "/manifest.json", "gen", {config_path},
                 params_json);

  info(opts) << "gen: wrote " << split.train.size() << "/" << split.val.size()
             << "/" << split.test.size() << " train/val/test records to "
             << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

int run_training(const GlobalOpts& opts, TrainSpec spec,
                 const std::string& data_dir, const std::string& out_dir,
                 const std::string& variant, const std::string& resume_path,
                 const std::vector<std::string>& manifest_inputs,
                 dtp::MetricReport* test_report) {
  if (!variant.empty())
    spec.model = dtp::ablation_variant(dtp::variant_from_name(variant),
                                       spec.model);
  if (opts.seed >= 0) spec.train.seed = static_cast<std::uint64_t>(opts.seed);
  spec.train.threads = opts.effective_threads();

  dtp::DatasetSplit split;
  split.train = load_records(data_dir, "train");
  split.val = load_records(data_dir, "val");

  const float fs = split.train.empty() ? 0.f
                                       : split.train[0].clean.sample_rate_hz;

  dtp::Model<float> model =
      dtp::build<float>(spec.model, dtp::derive_seed(spec.train.seed, 0xb111d));

  dtp::Checkpoint resume;
  const dtp::Checkpoint* resume_ptr = nullptr;
  if (!resume_path.empty()) {
    resume = dtp::load_checkpoint(resume_path);
    resume_ptr = &resume;
  }

  fs::create_directories(out_dir);
  std::vector<dtp::FreqTrace> freq_trace;
  const auto hook = [&](const dtp::EpochStats& stats,
                        const dtp::Model<float>& m) {
    freq_trace.push_back({stats.epoch,
                          dtp::mean_filter_frequency(m.encoder_weight, fs),
                          stats.val_loss});
    info(opts) << "epoch " << stats.epoch << " train " << stats.train_loss
               << " val " << stats.val_loss << "\n";
  };

  const dtp::TrainResult result =
      dtp::train(model, split, spec.train, hook, resume_ptr);

  dtp::save_checkpoint(out_dir + "/last.ckpt", result.last);
  if (result.best_improved || resume_path.empty())
    dtp::save_checkpoint(out_dir + "/best.ckpt", result.best);
  write_history_csv(out_dir + "/history.csv", result.history);
  dtp::write_freq_trace_csv(out_dir + "/freq_trace.csv", freq_trace);

  json params_json;
  params_json["variant"] = variant.empty() ? "as-configured" : variant;
  params_json["model"] = json::parse(dtp::config_to_json(spec.model));
  params_json["train"] = json::parse(dtp::train_config_to_json(spec.train));
  write_manifest(out_dir + "/manifest.json", "train", manifest_inputs,
                 params_json);

  if (result.diverged) {
    std::cerr << "train: diverged; last good checkpoint kept at " << out_dir
              << "/last.ckpt\n";
    return kExitDivergence;
  }

  if (test_report) {
    const auto test_records = load_records(data_dir, "test");
    const dtp::Model<float> best_model =
        dtp::model_from_checkpoint(result.best);
    *test_report =
        dtp::evaluate(best_model, test_records, {}, opts.effective_threads());
  }

  info(opts) << "train: " << result.history.size() << " epochs, best val "
             << result.best.best_val_loss << " at epoch "
             << result.best.best_epoch << "\n";
  return 0;
}

int cmd_train(const GlobalOpts& opts, const std::string& config_path,
              const std::string& data_dir, const std::string& out_dir,
              const std::string& variant, const std::string& resume_path) {
  const TrainSpec spec = train_spec_from_json(read_file(config_path));
  std::vector<std::string> inputs = {config_path};
  if (!resume_path.empty()) inputs.push_back(resume_path);
  return run_training(opts, spec, data_dir, out_dir, variant, resume_path,
                      inputs, nullptr);
}

// ---------------------------------------------------------------------------
// denoise

int cmd_denoise(const GlobalOpts& opts, const std::string& model_path,
                const std::string& in_path, const std::string& out_path,
                double csv_fs) {
  const dtp::Checkpoint checkpoint = dtp::load_checkpoint(model_path);
  const dtp::Model<float> model = dtp::model_from_checkpoint(checkpoint);

  std::vector<dtp::Segment> input;
  if (in_path.size() > 4 && in_path.ends_with(".csv")) {
    if (csv_fs <= 0.0)
      throw dtp::ConfigError("denoise: --csv-fs is required for CSV input");
    input = dtp::read_segments_csv(in_path, csv_fs);
  } else {
    input = dtp::read_segments(in_path);
  }

  std::vector<dtp::Segment> output(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    output[i] = dtp::segment_from_tensor(
        dtp::denoise_any_length(model, dtp::tensor_from_segment(input[i])),
        input[i].sample_rate_hz);
  }
  dtp::write_segments(out_path, output);

  json params_json;
  params_json["segments"] = input.size();
  write_manifest(out_path + ".manifest.json", "denoise",
                 {model_path, in_path}, params_json);
  info(opts) << "denoise: " << input.size() << " segments -> " << out_path
             << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const GlobalOpts& opts, const std::string& model_path,
             const std::string& data_dir, const std::string& split,
             const std::string& report_path) {
  const dtp::Checkpoint checkpoint = dtp::load_checkpoint(model_path);
  const dtp::Model<float> model = dtp::model_from_checkpoint(checkpoint);
  const auto records = load_records(data_dir, split);
  const dtp::MetricReport report =
      dtp::evaluate(model, records, {}, opts.effective_threads());

  std::ofstream f(report_path, std::ios::trunc);
  if (!f)
    throw dtp::IoError(dtp::IoErrorKind::OpenFailed,
                       "cannot open " + report_path);
  f << dtp::report_to_json(report) << "\n";
  f.close();

  json params_json;
  params_json["split"] = split;
  write_manifest(report_path + ".manifest.json", "eval",
                 {model_path, data_dir + "/" + split + "_clean.eegs",
                  data_dir + "/" + split + "_contaminated.eegs"},
                 params_json);

  info(opts) << "eval: " << records.size() << " segments, rrmse_t "
             << report.rrmse_t << ", cc " << report.cc << ", delta_snr "
             << report.delta_snr_db << " dB -> " << report_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ablate

int cmd_ablate(const GlobalOpts& opts, const std::string& config_path,
               const std::string& data_dir, const std::string& out_dir) {
  const TrainSpec spec = train_spec_from_json(read_file(config_path));
  fs::create_directories(out_dir);

  std::ofstream table(out_dir + "/ablation.csv", std::ios::trunc);
  if (!table)
    throw dtp::IoError(dtp::IoErrorKind::OpenFailed,
                       "cannot open " + out_dir + "/ablation.csv");
  table.precision(10);
  table << "variant,params,rrmse_t,rrmse_s,cc,delta_snr_db\n";

  info(opts) << "variant      params     rrmse_t  rrmse_s  cc      dSNR(dB)\n";
  int status = 0;
  for (dtp::AblationVariant variant : dtp::kAllVariants) {
    const char* name = dtp::variant_name(variant);
    dtp::MetricReport report;
    const int rc = run_training(opts, spec, data_dir,
                                out_dir + "/" + name, name, "", {config_path},
                                &report);
    if (rc != 0) {
      status = rc;
      continue;
    }
    const dtp::DTPNetConfig variant_config =
        dtp::ablation_variant(variant, spec.model);
    const std::int64_t params = dtp::param_count(variant_config);
    table << name << "," << params << "," << report.rrmse_t << ","
          << report.rrmse_s << "," << report.cc << "," << report.delta_snr_db
          << "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-10lld %-8.4f %-8.4f %-7.4f %.3f",
                  name, static_cast<long long>(params), report.rrmse_t,
                  report.rrmse_s, report.cc, report.delta_snr_db);
    info(opts) << line << "\n";
  }

  write_manifest(out_dir + "/manifest.json", "ablate", {config_path},
                 json::object());
  return status;
}

// ---------------------------------------------------------------------------
// inspect

struct Preset {
  const char* name;
  double fs;
  dtp::DTPNetConfig config;
  double reference_params_m;  // reported reference complexity figures
  double reference_flops_m;
};

std::vector<Preset> full_scale_presets() {
  std::vector<Preset> presets;
  {
    Preset p{"emg", 512.0, {}, 45.6, 91.2};
    p.config.encoder_filters = 454;
    p.config.encoder_kernel = 23;
    p.config.stride_override = 11;
    p.config.conv_channels = 440;
    p.config.conv_kernel = 5;
    p.config.blocks_per_pyramid = 5;
    p.config.pyramid_repeats = 7;
    presets.push_back(p);
  }
  {
    Preset p{"eog", 256.0, {}, 39.8, 79.6};
    p.config.encoder_filters = 248;
    p.config.encoder_kernel = 32;
    p.config.conv_channels = 394;
    p.config.conv_kernel = 4;
    p.config.blocks_per_pyramid = 6;
    p.config.pyramid_repeats = 6;
    presets.push_back(p);
  }
  {
    Preset p{"emg_eog", 256.0, {}, 10.0, 20.1};
    p.config.encoder_filters = 305;
    p.config.encoder_kernel = 32;
    p.config.conv_channels = 243;
    p.config.conv_kernel = 3;
    p.config.blocks_per_pyramid = 5;
    p.config.pyramid_repeats = 5;
    presets.push_back(p);
  }
  {
    Preset p{"semi_eog", 200.0, {}, 2.4, 4.7};
    p.config.encoder_filters = 512;
    p.config.encoder_kernel = 8;
    p.config.conv_channels = 64;
    p.config.conv_kernel = 3;
    p.config.blocks_per_pyramid = 6;
    p.config.pyramid_repeats = 4;
    presets.push_back(p);
  }
  return presets;
}

void print_complexity(const std::string& label,
                      const dtp::DTPNetConfig& config, int input_length,
                      const Preset* reference) {
  const std::int64_t params = dtp::param_count(config);
  // reference figures count one output position, i.e. 2 * params
  const std::int64_t flops_per_position = 2 * params;
  std::cout << label << ": params " << params << " (" << params / 1e6 << "M)"
            << ", flops/position " << flops_per_position << " ("
            << flops_per_position / 1e6 << "M)";
  if (input_length > 0) {
    std::cout << ", flops@T=" << input_length << " "
              << dtp::flops_estimate(config, input_length);
  }
  if (reference) {
    std::cout << " | reported reference: params "
              << reference->reference_params_m << "M, flops "
              << reference->reference_flops_m << "M";
  }
  std::cout << "\n";
}

int cmd_inspect_params(const std::string& config_path,
                       const std::string& preset_name, int input_length) {
  if (!config_path.empty()) {
    const dtp::DTPNetConfig config =
        dtp::config_from_json(read_file(config_path));
    print_complexity(config_path, config, input_length, nullptr);
    return 0;
  }
  const auto presets = full_scale_presets();
  bool found = false;
  for (const Preset& p : presets) {
    if (preset_name == "all" || preset_name == p.name) {
      print_complexity(p.name, p.config, input_length, &p);
      found = true;
    }
  }
  if (!found)
    throw dtp::ConfigError("inspect params: unknown preset '" + preset_name +
                           "', want emg|eog|emg_eog|semi_eog|all");
  return 0;
}

int cmd_inspect_filters(const GlobalOpts& opts, const std::string& model_path,
                        double fs, int pad, const std::string& out_path) {
  const dtp::Checkpoint checkpoint = dtp::load_checkpoint(model_path);
  const dtp::Model<float> model = dtp::model_from_checkpoint(checkpoint);
  const auto spectra =
      dtp::encoder_filter_spectra(model.encoder_weight, fs, pad);
  if (out_path.empty()) {
    std::cout << "index,peak_hz\n";
    for (const auto& s : spectra)
      std::cout << s.filter_index << "," << s.peak_frequency_hz << "\n";
  } else {
    dtp::write_filter_spectra_csv(out_path, spectra);
    write_manifest(out_path + ".manifest.json", "inspect filters",
                   {model_path}, json::object());
    info(opts) << "inspect: " << spectra.size() << " filters -> " << out_path
               << "\n";
  }
  return 0;
}

int cmd_inspect_rlp(const GlobalOpts& opts, const std::string& model_path,
                    const std::string& in_path, int count,
                    const std::string& out_path) {
  const dtp::Checkpoint checkpoint = dtp::load_checkpoint(model_path);
  const dtp::Model<float> model = dtp::model_from_checkpoint(checkpoint);
  auto segments = dtp::read_segments(in_path);
  if (count > 0 && static_cast<std::size_t>(count) < segments.size())
    segments.resize(static_cast<std::size_t>(count));

  std::vector<dtp::Tensor<float>> encoded;
  encoded.reserve(segments.size());
  for (const auto& s : segments) {
    dtp::Tensor<float> x = dtp::tensor_from_segment(s);
    // align to the encoder stride the same way denoising does
    const int kernel = model.config.encoder_kernel;
    const int stride = model.config.stride();
    int padded = std::max(s.length(), kernel);
    while ((padded - kernel) % stride != 0) ++padded;
    if (padded != s.length()) {
      dtp::Tensor<float> xp({1, padded});
      std::copy(x.values.begin(), x.values.end(), xp.values.begin());
      x = xp;
    }
    encoded.push_back(dtp::encode(model, x));
  }

  const auto traces = dtp::rlp(model, encoded);
  if (out_path.empty()) {
    std::cout << "block,mean_log10_ratio,excluded_samples\n";
    for (const auto& t : traces)
      std::cout << t.block_index << "," << t.mean_log10_ratio << ","
                << t.excluded_samples << "\n";
  } else {
    dtp::write_rlp_csv(out_path, traces);
    write_manifest(out_path + ".manifest.json", "inspect rlp",
                   {model_path, in_path}, json::object());
    info(opts) << "inspect: " << traces.size() << " blocks -> " << out_path
               << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DTP-Net EEG artifact removal toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts opts;
  app.add_option("--seed", opts.seed, "Override every configured seed");
  app.add_option("--threads", opts.threads,
                 "Worker threads (0 = hardware default)");
  app.add_flag("--quiet", opts.quiet, "Suppress progress output");

  // gen
  auto* gen = app.add_subcommand("gen", "Synthesize a semi-simulated dataset");
  std::string gen_config, gen_out;
  gen->add_option("--config", gen_config, "Dataset config JSON")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  std::string train_config, train_data, train_out, train_variant,
      train_resume;
  train->add_option("--config", train_config, "Combined model+train JSON")
      ->required();
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--variant", train_variant,
                    "basenet|tpb|dense|tpb_dense|tpb_res");
  train->add_option("--resume", train_resume, "Checkpoint to resume from");

  // denoise
  auto* denoise = app.add_subcommand("denoise", "Denoise a segment file");
  std::string den_model, den_in, den_out;
  double den_csv_fs = 0.0;
  denoise->add_option("--model", den_model, "Checkpoint")->required();
  denoise->add_option("--in", den_in, "Input segments (.eegs or .csv)")
      ->required();
  denoise->add_option("--out", den_out, "Output segment file")->required();
  denoise->add_option("--csv-fs", den_csv_fs, "Sample rate for CSV input");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model on paired data");
  std::string eval_model, eval_data, eval_split = "test", eval_report;
  eval->add_option("--model", eval_model, "Checkpoint")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--split", eval_split, "train|val|test (default test)");
  eval->add_option("--report", eval_report, "Report JSON path")->required();

  // ablate
  auto* ablate = app.add_subcommand(
      "ablate", "Train and evaluate all five connectivity/dilation variants");
  std::string abl_config, abl_data, abl_out;
  ablate->add_option("--config", abl_config, "Combined model+train JSON")
      ->required();
  ablate->add_option("--data", abl_data, "Dataset directory")->required();
  ablate->add_option("--out", abl_out, "Output directory")->required();

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Model probes");
  inspect->require_subcommand(1);

  auto* ins_filters = inspect->add_subcommand(
      "filters", "Encoder filter spectra sorted by peak frequency");
  std::string insf_model, insf_out;
  double insf_fs = 256.0;
  int insf_pad = 0;
  ins_filters->add_option("--model", insf_model, "Checkpoint")->required();
  ins_filters->add_option("--fs", insf_fs, "Sample rate in Hz");
  ins_filters->add_option("--pad", insf_pad, "FFT size (power of two)");
  ins_filters->add_option("--out", insf_out, "CSV path (default stdout)");

  auto* ins_rlp = inspect->add_subcommand(
      "rlp", "Per-block representation-learning ratios");
  std::string insr_model, insr_in, insr_out;
  int insr_count = 0;
  ins_rlp->add_option("--model", insr_model, "Checkpoint")->required();
  ins_rlp->add_option("--in", insr_in, "Segment file with probe inputs")
      ->required();
  ins_rlp->add_option("--count", insr_count, "Limit probe segments");
  ins_rlp->add_option("--out", insr_out, "CSV path (default stdout)");

  auto* ins_params = inspect->add_subcommand(
      "params", "Parameter count and FLOPs estimate");
  std::string insp_config, insp_preset = "all";
  int insp_len = 0;
  ins_params->add_option("--config", insp_config, "Model config JSON");
  ins_params->add_option("--preset", insp_preset,
                         "emg|eog|emg_eog|semi_eog|all");
  ins_params->add_option("--input-length", insp_len,
                         "Also report FLOPs for this signal length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(opts, gen_config, gen_out);
    if (train->parsed())
      return cmd_train(opts, train_config, train_data, train_out,
                       train_variant, train_resume);
    if (denoise->parsed())
      return cmd_denoise(opts, den_model, den_in, den_out, den_csv_fs);
    if (eval->parsed())
      return cmd_eval(opts, eval_model, eval_data, eval_split, eval_report);
    if (ablate->parsed()) return cmd_ablate(opts, abl_config, abl_data, abl_out);
    if (inspect->parsed()) {
      if (ins_filters->parsed())
        return cmd_inspect_filters(opts, insf_model, insf_fs, insf_pad,
                                   insf_out);
      if (ins_rlp->parsed())
        return cmd_inspect_rlp(opts, insr_model, insr_in, insr_count,
                               insr_out);
      if (ins_params->parsed())
        return cmd_inspect_params(insp_config, insp_preset, insp_len);
    }
  } catch (const dtp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dtp::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const dtp::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const dtp::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const dtp::MetricDomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMetric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    // filesystem failures and the like
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
