#include "decsde/trainer/trainer.h"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "decsde/common/error.h"
#include "decsde/common/random.h"
#include "decsde/segmenter/vocab.h"

namespace decsde::trainer {

void TrainConfig::validate() const {
  if (!(lr_peak > 0)) throw ConfigError("lr_peak must be positive");
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (!(label_smoothing >= 0 && label_smoothing < 1)) throw ConfigError("label_smoothing must be in [0, 1)");
  if (batch_tokens < 1) throw ConfigError("batch_tokens must be >= 1");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.eps > 0))
    throw ConfigError("adam betas must be in [0, 1) and eps positive");
  if (!(sampling_temperature > 0)) throw ConfigError("sampling_temperature must be positive");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
}

template <typename T>
Trainer<T>::Trainer(nmt::Transformer<T>& model, TrainConfig config)
    : model_(model), config_(config), adam_(model.params().all(), config.adam) {
  config_.validate();
}

template <typename T>
bool Trainer<T>::finished() const {
  return epoch_ >= config_.max_epochs || (config_.max_steps > 0 && step() >= config_.max_steps);
}

template <typename T>
nmt::Batch Trainer<T>::make_batch(const ParallelCorpus& corpus, std::span<const size_t> rows) const {
  std::vector<const nmt::SentencePair*> pairs;
  pairs.reserve(rows.size());
  for (size_t r : rows) pairs.push_back(&corpus.pairs.at(r));
  const auto lang = model_.language(corpus.lang);
  return nmt::make_batch(std::span<const nmt::SentencePair* const>(pairs), lang, model_.src_flag(lang),
                         model_.config().max_len);
}

template <typename T>
double Trainer<T>::train_step(const nmt::Batch& batch) {
  const int64_t step = adam_.steps() + 1;
  const double lr = lr_schedule(step, config_.warmup_steps, config_.lr_peak);
  Rng dropout_rng(mix_seed(config_.seed ^ 0xd50d0f7ULL, static_cast<uint64_t>(step)));
  numkernel::Tape<T> tape;
  auto loss = model_.loss(tape, batch, static_cast<T>(config_.label_smoothing), &dropout_rng);
  const double value = static_cast<double>(tape.value(loss).item());
  if (!std::isfinite(value)) throw NumericError("training loss is " + std::to_string(value) + " at step " + std::to_string(step));
  tape.backward(loss);
  adam_.step(lr);
  return value;
}

template <typename T>
EpochStats Trainer<T>::run_epoch(std::span<const ParallelCorpus> train, std::span<const ParallelCorpus> dev) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto plan = plan_epoch(train, config_.batch_tokens, config_.seed, epoch_, config_.sampling_temperature);
  double loss_sum = 0;
  int64_t tokens = 0;
  for (const auto& ref : plan) {
    if (config_.max_steps > 0 && step() >= config_.max_steps) break;
    const auto batch = make_batch(train[static_cast<size_t>(ref.corpus)], ref.rows);
    const int64_t n = batch.target_tokens();
    loss_sum += train_step(batch) * static_cast<double>(n);
    tokens += n;
  }
  const double train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  ++epoch_;
  EpochStats stats;
  stats.epoch = epoch_;
  stats.step = step();
  stats.loss = tokens > 0 ? loss_sum / static_cast<double>(tokens) : 0.0;
  stats.lr = lr_schedule(std::max<int64_t>(step(), 1), config_.warmup_steps, config_.lr_peak);
  stats.tokens_per_sec = train_seconds > 0 ? static_cast<double>(tokens) / train_seconds : 0.0;
  if (!dev.empty()) stats.dev_ppl = perplexity(dev);
  stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return stats;
}

template <typename T>
double Trainer<T>::perplexity(std::span<const ParallelCorpus> data) {
  double nll = 0;
  int64_t tokens = 0;
  for (const auto& ref : plan_eval(data, config_.batch_tokens)) {
    const auto batch = make_batch(data[static_cast<size_t>(ref.corpus)], ref.rows);
    numkernel::Tape<T> tape(false);
    const double loss = static_cast<double>(tape.value(model_.loss(tape, batch, T(0), nullptr)).item());
    nll += loss * static_cast<double>(batch.target_tokens());
    tokens += batch.target_tokens();
  }
  return tokens > 0 ? std::exp(nll / static_cast<double>(tokens)) : std::numeric_limits<double>::quiet_NaN();
}

TrainLog::TrainLog(const std::filesystem::path& path, bool append) {
  const bool fresh = !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw DataError("cannot write training log " + path.string());
  if (fresh) out_ << "epoch,step,loss,lr,tokens_per_sec,dev_ppl\n";
}

void TrainLog::write(const EpochStats& s) {
  char line[256];
  std::snprintf(line, sizeof line, "%lld,%lld,%.6f,%.8g,%.1f,%.4f\n", static_cast<long long>(s.epoch),
                static_cast<long long>(s.step), s.loss, s.lr, s.tokens_per_sec, s.dev_ppl);
  out_ << line;
  out_.flush();
}

template class Trainer<float>;
template class Trainer<double>;

}  // namespace decsde::trainer
