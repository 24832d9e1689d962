#include "tweetembed/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <stdexcept>

#include "text_util.hpp"
#include "tweetembed/checkpoint.hpp"
#include "tweetembed/errors.hpp"
#include "tweetembed/rng.hpp"

namespace tweetembed {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(adam.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

AdamState AdamState::zeros(const ModelHyper& hyper) {
  return {Weights::zeros(hyper), Weights::zeros(hyper), 0};
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               const AdamConfig& adam) {
  const auto g = grads.views();
  for (const auto& view : g) {
    for (std::size_t i = 0; i < view.values.size(); ++i) {
      if (!std::isfinite(view.values[i])) {
        throw DivergenceError("non-finite gradient in " + std::string(view.name) + " at flat index " +
                              std::to_string(i) + " (Adam step " + std::to_string(state.step + 1) +
                              ")");
      }
    }
  }
  auto theta = params.weights.views();
  auto m = state.first_moment.views();
  auto v = state.second_moment.views();
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (theta[k].values.size() != g[k].values.size() || m[k].values.size() != g[k].values.size()) {
      throw std::invalid_argument("shape mismatch in " + std::string(theta[k].name));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double m_correction = 1.0 - std::pow(adam.beta1, t);
  const double v_correction = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    auto& p = theta[k].values;
    auto& mk = m[k].values;
    auto& vk = v[k].values;
    const auto& gk = g[k].values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      mk[i] = adam.beta1 * mk[i] + (1.0 - adam.beta1) * gk[i];
      vk[i] = adam.beta2 * vk[i] + (1.0 - adam.beta2) * gk[i] * gk[i];
      const double m_hat = mk[i] / m_correction;
      const double v_hat = vk[i] / v_correction;
      p[i] -= adam.learning_rate * m_hat / (std::sqrt(v_hat) + adam.epsilon);
    }
  }
}

TrainResult train(const DatasetSplit& split, const ModelHyper& hyper, const TrainConfig& cfg) {
  cfg.validate();
  hyper.validate();
  if (split.train.empty()) throw std::invalid_argument("training split is empty");

  TrainResult result;
  result.params = init_params(hyper, cfg.seed);
  auto& params = result.params;
  AdamState adam = AdamState::zeros(hyper);

  const auto initial_train = evaluate_loss(params, split.train, cfg.threads);
  const auto initial_validation = evaluate_loss(params, split.validation, cfg.threads);
  result.initial_train_loss = initial_train.mean;
  result.initial_validation_loss = initial_validation.mean;
  result.clamped_losses = initial_train.clamped + initial_validation.clamped;

  std::vector<std::size_t> order(split.train.size());
  std::vector<TrainingTuple> batch;
  batch.reserve(cfg.batch_size);
  BackwardResult step;
  double best_validation = initial_validation.mean;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(derive_seed(cfg.seed, 0x100 + epoch));
    shuffle(std::span<std::size_t>(order), rng);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(split.train[order[i]]);
      backward_into(params, batch, cfg.threads, step);
      result.clamped_losses += step.clamped;
      if (!std::isfinite(step.mean_loss)) {
        throw DivergenceError("non-finite batch loss in epoch " + std::to_string(epoch));
      }
      adam_step(params, step.gradients, adam, cfg.adam);
    }

    const auto train_loss = evaluate_loss(params, split.train, cfg.threads);
    const auto validation_loss = evaluate_loss(params, split.validation, cfg.threads);
    result.clamped_losses += train_loss.clamped + validation_loss.clamped;
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;

    if (!std::isfinite(train_loss.mean) ||
        train_loss.mean > cfg.divergence_factor * result.initial_train_loss) {
      throw DivergenceError("training diverged in epoch " + std::to_string(epoch) +
                            ": train loss " + detail::format_double(train_loss.mean) +
                            " vs initial " + detail::format_double(result.initial_train_loss));
    }

    const EpochLog log{epoch, train_loss.mean, validation_loss.mean, elapsed.count()};
    result.logs.push_back(log);
    if (!cfg.checkpoint_path.empty()) {
      save_checkpoint({params, cfg.seed, cfg.vocab_fingerprint, epoch}, cfg.checkpoint_path);
    }
    if (cfg.on_epoch) cfg.on_epoch(log);

    if (cfg.patience > 0 && std::isfinite(validation_loss.mean)) {
      if (validation_loss.mean < best_validation) {
        best_validation = validation_loss.mean;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

TimingSummary timing_report(std::span<const EpochLog> logs) {
  if (logs.empty()) throw std::invalid_argument("timing report needs at least one epoch");
  TimingSummary s;
  for (const auto& log : logs) s.total_seconds += log.wall_seconds;
  s.mean_seconds = s.total_seconds / static_cast<double>(logs.size());
  return s;
}

std::string format_epoch_line(const EpochLog& log) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.3f", log.wall_seconds);
  return std::to_string(log.epoch) + '\t' + detail::format_double(log.train_loss) + '\t' +
         detail::format_double(log.validation_loss) + '\t' + secs;
}

std::vector<EpochLog> read_run_log(std::istream& in) {
  std::vector<EpochLog> logs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::strip_cr(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto f = detail::split_tabs(trimmed);
    const auto ctx = detail::where("run log", line_no);
    if (f.size() != 4) throw InputError(ctx + ": expected 4 fields");
    EpochLog log;
    log.epoch = detail::parse_u64(f[0], ctx);
    log.train_loss = detail::parse_double(f[1], ctx);
    log.validation_loss = detail::parse_double(f[2], ctx);
    log.wall_seconds = detail::parse_double(f[3], ctx);
    logs.push_back(log);
  }
  return logs;
}

}  // namespace tweetembed
