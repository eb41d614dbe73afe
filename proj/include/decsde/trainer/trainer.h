#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <span>

#include "decsde/nmt/transformer.h"
#include "decsde/trainer/data.h"
#include "decsde/trainer/optim.h"

namespace decsde::trainer {

struct TrainConfig {
  double lr_peak = 5e-4;
  int64_t warmup_steps = 400;
  int64_t max_epochs = 50;
  double label_smoothing = 0.1;
  int64_t batch_tokens = 2000;
  uint64_t seed = 1;
  AdamConfig adam;
  double sampling_temperature = 1.0;
  int64_t max_steps = 0;  // 0 = no limit

  void validate() const;
};

struct EpochStats {
  int64_t epoch = 0;  // 1-based, the epoch just finished
  int64_t step = 0;
  double loss = 0;    // token-weighted mean training loss
  double lr = 0;      // at the last step
  double tokens_per_sec = 0;
  double dev_ppl = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0;
};

// Owns the optimizer state and the epoch/step counters of one model. Batch
// order depends on (seed, epoch) and dropout masks on (seed, step), so a run
// restored from a checkpoint continues exactly.
template <typename T>
class Trainer {
 public:
  Trainer(nmt::Transformer<T>& model, TrainConfig config);

  // One pass over train (languages must be registered in the model); dev
  // perplexity is computed when dev is non-empty.
  EpochStats run_epoch(std::span<const ParallelCorpus> train, std::span<const ParallelCorpus> dev = {});
  // Forward, backward and Adam update on one batch; returns the loss.
  double train_step(const nmt::Batch& batch);
  // exp(mean token NLL) without smoothing or dropout.
  double perplexity(std::span<const ParallelCorpus> data);

  nmt::Batch make_batch(const ParallelCorpus& corpus, std::span<const size_t> rows) const;

  nmt::Transformer<T>& model() { return model_; }
  const TrainConfig& config() const { return config_; }
  Adam<T>& optimizer() { return adam_; }
  int64_t epoch() const { return epoch_; }
  int64_t step() const { return adam_.steps(); }
  bool finished() const;
  void set_epoch(int64_t epoch) { epoch_ = epoch; }

 private:
  nmt::Transformer<T>& model_;
  TrainConfig config_;
  Adam<T> adam_;
  int64_t epoch_ = 0;  // completed epochs
};

// CSV "epoch,step,loss,lr,tokens_per_sec,dev_ppl", one row per epoch.
class TrainLog {
 public:
  // append keeps existing rows (resumed runs).
  TrainLog(const std::filesystem::path& path, bool append);
  void write(const EpochStats& stats);

 private:
  std::ofstream out_;
};

}  // namespace decsde::trainer
