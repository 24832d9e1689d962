#pragma once

// Mini-batch Adam training with per-epoch full-dataset train/validation loss.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tweetembed/dataset.hpp"
#include "tweetembed/model.hpp"

namespace tweetembed {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;
  double validation_loss = 0;
  double wall_seconds = 0;
};

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 256;
  AdamConfig adam;
  std::uint64_t seed = 13;
  bool deterministic = false;
  // Gradient shards per batch; shard sums are reduced in shard order.
  unsigned threads = 1;
  // Stop after this many epochs without a validation improvement. 0 = off.
  std::size_t patience = 0;
  // Abort when the epoch train loss exceeds this multiple of the initial one.
  double divergence_factor = 10.0;
  // Written after every completed epoch when set.
  std::filesystem::path checkpoint_path;
  std::uint64_t vocab_fingerprint = 0;
  std::function<void(const EpochLog&)> on_epoch;

  void validate() const;
};

struct AdamState {
  Weights first_moment;
  Weights second_moment;
  std::uint64_t step = 0;

  static AdamState zeros(const ModelHyper& hyper);
};

// Bias-corrected Adam:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,  t <- t + 1
//   theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
// Throws DivergenceError, before touching anything, if a gradient entry is
// not finite.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const AdamConfig& adam);

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> logs;
  // Full-dataset losses of the freshly initialized model.
  double initial_train_loss = 0;
  double initial_validation_loss = 0;
  std::size_t clamped_losses = 0;
  bool stopped_early = false;
};

// Each epoch visits split.train in a fresh permutation drawn from
// SplitMix64(derive_seed(cfg.seed, 0x100 + epoch)). Throws DivergenceError
// on non-finite values or a loss blow-up; the checkpoint of the last good
// epoch stays on disk.
TrainResult train(const DatasetSplit& split, const ModelHyper& hyper, const TrainConfig& cfg);

struct TimingSummary {
  double mean_seconds = 0;
  double total_seconds = 0;
};

TimingSummary timing_report(std::span<const EpochLog> logs);

// "epoch\ttrain_loss\tval_loss\tsecs". Losses print in shortest round-trip
// form, seconds with millisecond resolution.
std::string format_epoch_line(const EpochLog& log);
std::vector<EpochLog> read_run_log(std::istream& in);

}  // namespace tweetembed
