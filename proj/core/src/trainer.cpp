#include "dtpnet/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "dtpnet/rng.hpp"

namespace dtp {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little);

void TrainConfig::validate() const {
  if (!(initial_learning_rate > 0.0))
    throw ConfigError("train config: initial_learning_rate " +
                      std::to_string(initial_learning_rate));
  if (beta1 < 0.0 || beta1 >= 1.0)
    throw ConfigError("train config: beta1 " + std::to_string(beta1));
  if (beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("train config: beta2 " + std::to_string(beta2));
  if (!(epsilon > 0.0))
    throw ConfigError("train config: epsilon " + std::to_string(epsilon));
  if (batch_size < 1)
    throw ConfigError("train config: batch_size " + std::to_string(batch_size));
  if (patience < 1)
    throw ConfigError("train config: patience " + std::to_string(patience));
  if (max_epochs < 1)
    throw ConfigError("train config: max_epochs " + std::to_string(max_epochs));
  if (grad_clip < 0.0)
    throw ConfigError("train config: grad_clip " + std::to_string(grad_clip));
  if (threads < 1)
    throw ConfigError("train config: threads " + std::to_string(threads));
}

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("train config: not a JSON object");

  static const char* known[] = {"initial_learning_rate", "beta1", "beta2",
                                "epsilon", "batch_size", "patience",
                                "max_epochs", "seed", "grad_clip", "threads"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("train config: unknown field '" + key + "'");
  }

  TrainConfig c;
  auto num = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
      throw ConfigError(std::string("train config: field '") + key +
                        "' must be numeric");
    return j[key].get<double>();
  };
  c.initial_learning_rate =
      num("initial_learning_rate", c.initial_learning_rate);
  c.beta1 = num("beta1", c.beta1);
  c.beta2 = num("beta2", c.beta2);
  c.epsilon = num("epsilon", c.epsilon);
  c.batch_size = static_cast<int>(num("batch_size", c.batch_size));
  c.patience = static_cast<int>(num("patience", c.patience));
  c.max_epochs = static_cast<int>(num("max_epochs", c.max_epochs));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      throw ConfigError("train config: field 'seed' must be an integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.grad_clip = num("grad_clip", c.grad_clip);
  c.threads = static_cast<int>(num("threads", c.threads));
  c.validate();
  return c;
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["initial_learning_rate"] = c.initial_learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["batch_size"] = c.batch_size;
  j["patience"] = c.patience;
  j["max_epochs"] = c.max_epochs;
  j["seed"] = c.seed;
  j["grad_clip"] = c.grad_clip;
  j["threads"] = c.threads;
  return j.dump();
}

namespace {

// fn(i) runs once per index; work items are independent
template <typename Fn>
void parallel_indexed(int n, int threads, Fn&& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void adam_step(const std::vector<Tensor<float>*>& weights,
               const std::vector<const Tensor<float>*>& gradients,
               AdamState& state, const TrainConfig& config) {
  if (weights.size() != gradients.size())
    throw ShapeError("adam_step: " + std::to_string(weights.size()) +
                     " weights vs " + std::to_string(gradients.size()) +
                     " gradients");
  if (state.m.size() != weights.size()) {
    state.m.clear();
    state.v.clear();
    for (const Tensor<float>* w : weights) {
      state.m.emplace_back(w->shape);
      state.v.emplace_back(w->shape);
    }
  }
  for (std::size_t p = 0; p < weights.size(); ++p) {
    if (!weights[p]->same_shape(*gradients[p]))
      throw ShapeError("adam_step: weight " + std::to_string(p) + " shape " +
                       weights[p]->shape_str() + " != gradient shape " +
                       gradients[p]->shape_str());
    for (float g : gradients[p]->values) {
      if (!std::isfinite(g))
        throw DivergenceError("adam_step: non-finite gradient in tensor " +
                              std::to_string(p) + ", step refused");
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);

  for (std::size_t p = 0; p < weights.size(); ++p) {
    Tensor<float>& w = *weights[p];
    const Tensor<float>& g = *gradients[p];
    Tensor<float>& m = state.m[p];
    Tensor<float>& v = state.v[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = static_cast<double>(g.values[i]);
      const double mi =
          config.beta1 * static_cast<double>(m.values[i]) +
          (1.0 - config.beta1) * gi;
      const double vi =
          config.beta2 * static_cast<double>(v.values[i]) +
          (1.0 - config.beta2) * gi * gi;
      m.values[i] = static_cast<float>(mi);
      v.values[i] = static_cast<float>(vi);
      const double m_hat = mi / bias1;
      const double v_hat = vi / bias2;
      w.values[i] = static_cast<float>(
          static_cast<double>(w.values[i]) -
          config.initial_learning_rate * m_hat /
              (std::sqrt(v_hat) + config.epsilon));
    }
  }
}

Checkpoint checkpoint_from(const Model<float>& model, const AdamState& opt,
                           int epoch, int best_epoch, double best_val_loss) {
  Checkpoint c;
  c.config = model.config;
  for (const auto& [name, tensor] : model.named_params())
    c.tensors.emplace_back(name, *tensor);
  c.opt = opt;
  if (c.opt.m.empty()) {
    for (const auto& [name, tensor] : c.tensors) {
      c.opt.m.emplace_back(tensor.shape);
      c.opt.v.emplace_back(tensor.shape);
    }
  }
  c.epoch = epoch;
  c.best_epoch = best_epoch;
  c.best_val_loss = best_val_loss;
  return c;
}

Model<float> model_from_checkpoint(const Checkpoint& checkpoint) {
  Model<float> model = build<float>(checkpoint.config, 0);
  auto params = model.named_params();
  if (params.size() != checkpoint.tensors.size())
    throw IoError(IoErrorKind::BadValue,
                  "checkpoint: " + std::to_string(checkpoint.tensors.size()) +
                      " tensors for a config with " +
                      std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != checkpoint.tensors[i].first)
      throw IoError(IoErrorKind::BadValue,
                    "checkpoint: tensor '" + checkpoint.tensors[i].first +
                        "' where '" + params[i].first + "' was expected");
    if (params[i].second->shape != checkpoint.tensors[i].second.shape)
      throw IoError(IoErrorKind::BadValue,
                    "checkpoint: tensor '" + params[i].first +
                        "' shape mismatch");
    *params[i].second = checkpoint.tensors[i].second;
  }
  return model;
}

namespace {

constexpr char kCheckpointMagic[4] = {'D', 'T', 'P', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

// trainer bookkeeping rides in the tensor table under reserved names
constexpr const char* kEpochEntry = "trainer/epoch";
constexpr const char* kBestEpochEntry = "trainer/best_epoch";

void put(std::ofstream& f, const void* p, std::size_t n) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void take(std::ifstream& f, void* p, std::size_t n, const char* what) {
  f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (f.gcount() != static_cast<std::streamsize>(n))
    throw IoError(IoErrorKind::Truncated,
                  std::string("checkpoint truncated reading ") + what);
}

void put_entry(std::ofstream& f, const std::string& name,
               const Tensor<float>& tensor) {
  const std::uint16_t name_len = static_cast<std::uint16_t>(name.size());
  put(f, &name_len, 2);
  put(f, name.data(), name.size());
  const std::uint32_t rank = static_cast<std::uint32_t>(tensor.rank());
  put(f, &rank, 4);
  for (int d = 0; d < tensor.rank(); ++d) {
    const std::uint32_t dim = static_cast<std::uint32_t>(tensor.dim(d));
    put(f, &dim, 4);
  }
  put(f, tensor.values.data(), tensor.size() * sizeof(float));
}

std::pair<std::string, Tensor<float>> take_entry(std::ifstream& f) {
  std::uint16_t name_len = 0;
  take(f, &name_len, 2, "tensor name length");
  std::string name(name_len, '\0');
  take(f, name.data(), name_len, "tensor name");
  std::uint32_t rank = 0;
  take(f, &rank, 4, "tensor rank");
  if (rank < 1 || rank > 3)
    throw IoError(IoErrorKind::BadValue,
                  "checkpoint: tensor '" + name + "' rank " +
                      std::to_string(rank));
  std::vector<int> shape;
  std::size_t n = 1;
  for (std::uint32_t d = 0; d < rank; ++d) {
    std::uint32_t dim = 0;
    take(f, &dim, 4, "tensor dims");
    if (dim == 0 || dim > (1u << 28))
      throw IoError(IoErrorKind::BadValue,
                    "checkpoint: tensor '" + name + "' dimension " +
                        std::to_string(dim));
    shape.push_back(static_cast<int>(dim));
    n *= dim;
  }
  Tensor<float> tensor(shape);
  take(f, tensor.values.data(), n * sizeof(float), "tensor data");
  return {std::move(name), std::move(tensor)};
}

Tensor<float> scalar_entry(double value) {
  Tensor<float> t({1});
  t.values[0] = static_cast<float>(value);
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(IoErrorKind::OpenFailed, "cannot open " + path);

  put(f, kCheckpointMagic, 4);
  put(f, &kCheckpointVersion, 4);
  const std::string config_json = config_to_json(checkpoint.config);
  const std::uint32_t config_len =
      static_cast<std::uint32_t>(config_json.size());
  put(f, &config_len, 4);
  put(f, config_json.data(), config_json.size());

  const std::uint32_t n_tensors =
      static_cast<std::uint32_t>(3 * checkpoint.tensors.size() + 2);
  put(f, &n_tensors, 4);
  for (const auto& [name, tensor] : checkpoint.tensors)
    put_entry(f, name, tensor);
  for (std::size_t i = 0; i < checkpoint.tensors.size(); ++i)
    put_entry(f, checkpoint.tensors[i].first + "/m", checkpoint.opt.m[i]);
  for (std::size_t i = 0; i < checkpoint.tensors.size(); ++i)
    put_entry(f, checkpoint.tensors[i].first + "/v", checkpoint.opt.v[i]);
  put_entry(f, kEpochEntry, scalar_entry(checkpoint.epoch));
  put_entry(f, kBestEpochEntry, scalar_entry(checkpoint.best_epoch));

  const std::uint64_t step = static_cast<std::uint64_t>(checkpoint.opt.step);
  put(f, &step, 8);
  put(f, &checkpoint.best_val_loss, 8);
  if (!f) throw IoError(IoErrorKind::WriteFailed, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(IoErrorKind::OpenFailed, "cannot open " + path);

  char magic[4];
  take(f, magic, 4, "magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw IoError(IoErrorKind::BadMagic, path + ": bad magic");
  std::uint32_t version = 0;
  take(f, &version, 4, "version");
  if (version != kCheckpointVersion)
    throw IoError(IoErrorKind::BadVersion,
                  path + ": version " + std::to_string(version));
  std::uint32_t config_len = 0;
  take(f, &config_len, 4, "config length");
  std::string config_json(config_len, '\0');
  take(f, config_json.data(), config_len, "config");

  Checkpoint c;
  try {
    c.config = config_from_json(config_json);
  } catch (const ConfigError& e) {
    throw IoError(IoErrorKind::BadValue,
                  path + ": embedded config: " + e.what());
  }

  std::uint32_t n_tensors = 0;
  take(f, &n_tensors, 4, "tensor count");

  std::vector<std::pair<std::string, Tensor<float>>> weights, moments_m,
      moments_v;
  int epoch = 0, best_epoch = 0;
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    auto [name, tensor] = take_entry(f);
    if (name == kEpochEntry) {
      epoch = static_cast<int>(tensor.values[0]);
    } else if (name == kBestEpochEntry) {
      best_epoch = static_cast<int>(tensor.values[0]);
    } else if (name.size() > 2 && name.ends_with("/m")) {
      moments_m.emplace_back(name.substr(0, name.size() - 2),
                             std::move(tensor));
    } else if (name.size() > 2 && name.ends_with("/v")) {
      moments_v.emplace_back(name.substr(0, name.size() - 2),
                             std::move(tensor));
    } else {
      weights.emplace_back(std::move(name), std::move(tensor));
    }
  }

  if (moments_m.size() != weights.size() || moments_v.size() != weights.size())
    throw IoError(IoErrorKind::BadValue,
                  path + ": optimizer buffers do not match the weight table");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (moments_m[i].first != weights[i].first ||
        moments_v[i].first != weights[i].first)
      throw IoError(IoErrorKind::BadValue,
                    path + ": optimizer buffer order mismatch at '" +
                        weights[i].first + "'");
    c.opt.m.push_back(std::move(moments_m[i].second));
    c.opt.v.push_back(std::move(moments_v[i].second));
  }
  c.tensors = std::move(weights);
  c.epoch = epoch;
  c.best_epoch = best_epoch;

  std::uint64_t step = 0;
  take(f, &step, 8, "step counter");
  c.opt.step = static_cast<std::int64_t>(step);
  take(f, &c.best_val_loss, 8, "best validation loss");

  // shape validation against the config
  (void)model_from_checkpoint(c);
  return c;
}

namespace {

struct SampleResult {
  double loss = 0.0;
  std::vector<Tensor<float>> grads;
};

// forward + backward for one record; grads line up with named_params
SampleResult sample_pass(const Model<float>& model, const MixRecord& record) {
  Tape<float> tape;
  const Tensor<float> x = tensor_from_segment(record.contaminated);
  const ForwardGraph g = build_forward(tape, model, x, true);
  const int target = tape.leaf(tensor_from_segment(record.clean), false);
  const int loss = tape.mse_loss(g.output, target);
  tape.backward(loss);

  SampleResult result;
  result.loss = static_cast<double>(tape.value(loss).values[0]);
  result.grads.reserve(g.weights.size());
  for (int id : g.weights) {
    const Tensor<float>& grad = tape.grad(id);
    result.grads.push_back(grad.size() ? grad
                                       : Tensor<float>(tape.value(id).shape));
  }
  return result;
}

double forward_loss(const Model<float>& model, const MixRecord& record) {
  const Tensor<float> x = tensor_from_segment(record.contaminated);
  const Tensor<float> y = forward(model, x);
  return mse_loss(y, tensor_from_segment(record.clean));
}

}  // namespace

double dataset_mse(const Model<float>& model,
                   const std::vector<MixRecord>& records, int threads) {
  if (records.empty()) throw ConfigError("dataset_mse: no records");
  std::vector<double> losses(records.size());
  parallel_indexed(static_cast<int>(records.size()), threads, [&](int i) {
    losses[static_cast<std::size_t>(i)] =
        forward_loss(model, records[static_cast<std::size_t>(i)]);
  });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(records.size());
}

TrainResult train(Model<float>& model, const DatasetSplit& split,
                  const TrainConfig& config, const EpochHook& hook,
                  const Checkpoint* resume) {
  config.validate();
  if (split.train.empty()) throw ConfigError("train: empty training set");
  if (split.val.empty()) throw ConfigError("train: empty validation set");

  AdamState opt;
  int start_epoch = 1;
  int best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  if (resume) {
    Model<float> restored = model_from_checkpoint(*resume);
    if (config_to_json(restored.config) != config_to_json(model.config))
      throw ConfigError("train: resume checkpoint config differs");
    model = std::move(restored);
    opt = resume->opt;
    start_epoch = resume->epoch + 1;
    best_epoch = resume->best_epoch;
    best_val = resume->best_val_loss;
  }

  auto params = model.named_params();
  TrainResult result;
  result.best = checkpoint_from(model, opt, start_epoch - 1, best_epoch, best_val);
  result.last = result.best;

  const int n_train = static_cast<int>(split.train.size());
  std::vector<int> order(static_cast<std::size_t>(n_train));
  std::vector<SampleResult> batch_results(
      static_cast<std::size_t>(config.batch_size));

  for (int epoch = start_epoch; epoch <= config.max_epochs; ++epoch) {
    // per-epoch shuffle derived from (seed, epoch): resumable mid-run
    for (int i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng shuffle_rng(derive_seed(config.seed, 0xe90c4 + epoch));
    for (int i = n_train - 1; i > 0; --i) {
      const int j = shuffle_rng.uniform_int(0, i);
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }

    double epoch_loss = 0.0;
    bool finite = true;
    for (int start = 0; start < n_train && finite;
         start += config.batch_size) {
      const int batch_n = std::min(config.batch_size, n_train - start);
      parallel_indexed(batch_n, config.threads, [&](int i) {
        batch_results[static_cast<std::size_t>(i)] = sample_pass(
            model,
            split.train[static_cast<std::size_t>(
                order[static_cast<std::size_t>(start + i)])]);
      });

      // deterministic fold in sample order
      std::vector<Tensor<float>> batch_grads;
      batch_grads.reserve(params.size());
      for (const auto& [name, w] : params) batch_grads.emplace_back(w->shape);
      const double inv = 1.0 / static_cast<double>(batch_n);
      for (int i = 0; i < batch_n; ++i) {
        const SampleResult& r = batch_results[static_cast<std::size_t>(i)];
        epoch_loss += r.loss;
        for (std::size_t p = 0; p < params.size(); ++p) {
          for (std::size_t j = 0; j < batch_grads[p].size(); ++j) {
            batch_grads[p].values[j] += static_cast<float>(
                static_cast<double>(r.grads[p].values[j]) * inv);
          }
        }
      }

      if (config.grad_clip > 0.0) {
        double norm_sq = 0.0;
        for (const auto& g : batch_grads)
          for (float v : g.values)
            norm_sq += static_cast<double>(v) * static_cast<double>(v);
        const double norm = std::sqrt(norm_sq);
        if (norm > config.grad_clip) {
          const float scale = static_cast<float>(config.grad_clip / norm);
          for (auto& g : batch_grads)
            for (float& v : g.values) v *= scale;
        }
      }

      std::vector<Tensor<float>*> weights;
      std::vector<const Tensor<float>*> grads;
      for (std::size_t p = 0; p < params.size(); ++p) {
        weights.push_back(params[p].second);
        grads.push_back(&batch_grads[p]);
      }
      try {
        adam_step(weights, grads, opt, config);
      } catch (const DivergenceError&) {
        finite = false;
      }
    }

    const double train_loss = epoch_loss / static_cast<double>(n_train);
    if (!finite || !std::isfinite(train_loss)) {
      result.diverged = true;
      model = model_from_checkpoint(result.last);  // last good state
      break;
    }

    const double val_loss = dataset_mse(model, split.val, config.threads);
    if (!std::isfinite(val_loss)) {
      result.diverged = true;
      model = model_from_checkpoint(result.last);
      break;
    }

    EpochStats stats{epoch, train_loss, val_loss};
    result.history.push_back(stats);
    if (hook) hook(stats, model);

    if (val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      result.best = checkpoint_from(model, opt, epoch, best_epoch, best_val);
      result.best_improved = true;
    }
    result.last = checkpoint_from(model, opt, epoch, best_epoch, best_val);

    if (epoch - best_epoch >= config.patience) break;
  }

  if (!result.best_improved) {
    // keep a usable best slot; the caller knows it never improved
    result.best.best_epoch = best_epoch;
    result.best.best_val_loss = best_val;
  }
  return result;
}

MetricReport evaluate(const Model<float>& model,
                      const std::vector<MixRecord>& records,
                      const PsdParams& psd_params, int threads) {
  return evaluate_fn(
      [&model](const Segment& s) {
        return segment_from_tensor(
            denoise_any_length(model, tensor_from_segment(s)),
            s.sample_rate_hz);
      },
      records, psd_params, threads);
}

MetricReport evaluate_fn(const DenoiseFn& denoise,
                         const std::vector<MixRecord>& records,
                         const PsdParams& psd_params, int threads) {
  if (records.empty()) throw ConfigError("evaluate: no records");

  struct Row {
    int level;
    double rrmse_t_v, rrmse_s_v, cc_v, before, after;
  };
  std::vector<Row> rows(records.size());
  parallel_indexed(static_cast<int>(records.size()), threads, [&](int i) {
    const MixRecord& rec = records[static_cast<std::size_t>(i)];
    const Segment denoised = denoise(rec.contaminated);
    Row& row = rows[static_cast<std::size_t>(i)];
    row.level = static_cast<int>(std::lround(rec.snr_db));
    row.rrmse_t_v = rrmse_t(rec.clean, denoised);
    row.rrmse_s_v = rrmse_s(rec.clean, denoised, psd_params);
    row.cc_v = cc(rec.clean, denoised);
    row.before = snr_db(rec.clean, rec.contaminated);
    row.after = snr_db(rec.clean, denoised);
  });

  MetricReport report;
  report.count = static_cast<int>(rows.size());
  std::vector<int> levels;
  for (const Row& row : rows) {
    if (std::find(levels.begin(), levels.end(), row.level) == levels.end())
      levels.push_back(row.level);
  }
  std::sort(levels.begin(), levels.end());

  auto fold = [](const std::vector<Row>& subset) {
    SnrGroup g;
    g.count = static_cast<int>(subset.size());
    for (const Row& row : subset) {
      g.rrmse_t += row.rrmse_t_v;
      g.rrmse_s += row.rrmse_s_v;
      g.cc += row.cc_v;
      g.snr_before_db += row.before;
      g.snr_after_db += row.after;
      g.delta_snr_db += row.after - row.before;
    }
    const double n = static_cast<double>(g.count);
    g.rrmse_t /= n;
    g.rrmse_s /= n;
    g.cc /= n;
    g.snr_before_db /= n;
    g.snr_after_db /= n;
    g.delta_snr_db /= n;
    return g;
  };

  const SnrGroup overall = fold(rows);
  report.rrmse_t = overall.rrmse_t;
  report.rrmse_s = overall.rrmse_s;
  report.cc = overall.cc;
  report.snr_before_db = overall.snr_before_db;
  report.snr_after_db = overall.snr_after_db;
  report.delta_snr_db = overall.delta_snr_db;

  for (int level : levels) {
    std::vector<Row> subset;
    for (const Row& row : rows)
      if (row.level == level) subset.push_back(row);
    SnrGroup g = fold(subset);
    g.snr_db = level;
    report.per_snr.push_back(g);
  }
  return report;
}

}  // namespace dtp
