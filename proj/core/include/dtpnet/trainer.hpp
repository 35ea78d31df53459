#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dtpnet/metrics.hpp"
#include "dtpnet/model.hpp"
#include "dtpnet/signal.hpp"

namespace dtp {

struct TrainConfig {
  double initial_learning_rate = 4.5e-4;  // constant; no schedule
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 32;
  int patience = 30;  // early-stop epochs without val improvement
  int max_epochs = 100;
  std::uint64_t seed = 0;
  double grad_clip = 0.0;  // global L2 clip, 0 disables
  int threads = 1;

  void validate() const;
};

TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& config);

// First/second moment buffers mirror the weight list order.
struct AdamState {
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;
  std::int64_t step = 0;
};

// Bias-corrected update, computed per element in double. Refuses the step on
// a non-finite gradient.
void adam_step(const std::vector<Tensor<float>*>& weights,
               const std::vector<const Tensor<float>*>& gradients,
               AdamState& state, const TrainConfig& config);

struct Checkpoint {
  DTPNetConfig config;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  AdamState opt;
  int epoch = 0;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

Checkpoint checkpoint_from(const Model<float>& model, const AdamState& opt,
                           int epoch, int best_epoch, double best_val_loss);
Model<float> model_from_checkpoint(const Checkpoint& checkpoint);

// Binary little-endian: magic "DTPC", u32 version = 1, u32 config_len +
// UTF-8 JSON config, u32 n_tensors, per tensor u16 name_len + name,
// u32 rank, rank x u32 dims, f32 data; optimizer buffers share the table
// under "/m" and "/v" name suffixes; trailing u64 step counter and
// f64 best_val_loss. Round trips are byte-identical.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  Checkpoint best;
  Checkpoint last;
  bool best_improved = false;  // false when resuming never beat the old best
  bool diverged = false;
};

using EpochHook = std::function<void(const EpochStats&, const Model<float>&)>;

// MSE training with per-epoch shuffling from the seed, early stopping on
// validation MSE, best-val checkpointing. Resuming from a `last` checkpoint
// reproduces the uninterrupted trajectory exactly.
TrainResult train(Model<float>& model, const DatasetSplit& split,
                  const TrainConfig& config, const EpochHook& hook = nullptr,
                  const Checkpoint* resume = nullptr);

// mean MSE of forward(contaminated) vs clean over the records, in 64-bit
double dataset_mse(const Model<float>& model,
                   const std::vector<MixRecord>& records, int threads = 1);

using DenoiseFn = std::function<Segment(const Segment&)>;

// Denoises every contaminated segment and reports the metrics against the
// clean reference, overall and grouped by requested integer SNR level.
MetricReport evaluate(const Model<float>& model,
                      const std::vector<MixRecord>& records,
                      const PsdParams& psd_params = {}, int threads = 1);
MetricReport evaluate_fn(const DenoiseFn& denoise,
                         const std::vector<MixRecord>& records,
                         const PsdParams& psd_params = {}, int threads = 1);

}  // namespace dtp
