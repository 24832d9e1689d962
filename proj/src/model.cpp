#include "tweetembed/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tweetembed/rng.hpp"

namespace tweetembed {

namespace {

constexpr std::size_t kEvalChunk = 512;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

CrossEntropy log_loss(double p) {
  if (p < kProbabilityFloor) return {-std::log(kProbabilityFloor), true};
  return {-std::log(p), false};
}

template <typename Derived>
void fill_glorot(Eigen::DenseBase<Derived>& m, SplitMix64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-limit, limit);
  }
}

void check_context(const ModelHyper& hyper, const std::array<TokenId, 4>& context) {
  for (const TokenId id : context) {
    if (id >= hyper.input_rows()) {
      throw std::out_of_range("context id " + std::to_string(id) + " outside input table of " +
                              std::to_string(hyper.input_rows()) + " rows");
    }
  }
}

// Worker threads must not throw, so ids are checked up front.
void check_tuples(const ModelHyper& hyper, std::span<const TrainingTuple> tuples) {
  for (const auto& t : tuples) {
    check_context(hyper, t.context);
    if (t.target >= hyper.vocab_size) {
      throw std::out_of_range("target id " + std::to_string(t.target) + " outside vocabulary");
    }
  }
}

// Activations of a batch, one row per example.
struct BatchActivations {
  RowMatrix merged;
  RowMatrix context_act;
  RowMatrix logits;
  RowMatrix probs;
};

void forward_batch(const ModelParams& params, std::span<const TrainingTuple> batch,
                   BatchActivations& a) {
  const auto& w = params.weights;
  const auto d_in = static_cast<Eigen::Index>(params.hyper.input_dim);
  const auto n = static_cast<Eigen::Index>(batch.size());
  a.merged.resize(n, 4 * d_in);
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto& t = batch[static_cast<std::size_t>(b)];
    for (Eigen::Index k = 0; k < 4; ++k) {
      a.merged.row(b).segment(k * d_in, d_in) = w.input.row(t.context[static_cast<std::size_t>(k)]);
    }
  }
  a.context_act.noalias() = a.merged * w.context;
  a.context_act.rowwise() += w.context_bias.transpose();
  a.context_act = a.context_act.unaryExpr(&sigmoid);
  a.logits.noalias() = a.context_act * w.output;
  a.logits.rowwise() += w.output_bias.transpose();
  if (params.hyper.sigmoid_logits) a.logits = a.logits.unaryExpr(&sigmoid);
  a.probs.resize(n, a.logits.cols());
  for (Eigen::Index b = 0; b < n; ++b) {
    const double top = a.logits.row(b).maxCoeff();
    a.probs.row(b) = (a.logits.row(b).array() - top).exp();
    a.probs.row(b) /= a.probs.row(b).sum();
  }
}

// Per-thread buffers, reused across batches so the training loop does not
// allocate.
struct Scratch {
  BatchActivations a;
  RowMatrix d_logits;
  RowMatrix d_pre;
  RowMatrix d_merged;
  Gradients piece_sum;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

bool same_shapes(const Weights& w, const ModelHyper& hyper) {
  return w.input.rows() == static_cast<Eigen::Index>(hyper.input_rows()) &&
         w.input.cols() == static_cast<Eigen::Index>(hyper.input_dim) &&
         w.context.rows() == static_cast<Eigen::Index>(4 * hyper.input_dim) &&
         w.context.cols() == static_cast<Eigen::Index>(hyper.context_dim) &&
         w.output.cols() == static_cast<Eigen::Index>(hyper.vocab_size);
}

void zero_like(Weights& w, const ModelHyper& hyper) {
  if (!same_shapes(w, hyper)) {
    w = Weights::zeros(hyper);
    return;
  }
  w.input.setZero();
  w.context.setZero();
  w.context_bias.setZero();
  w.output.setZero();
  w.output_bias.setZero();
}

struct PieceLoss {
  double loss_sum = 0;
  std::size_t clamped = 0;
};

// Adds the un-normalized (summed over the piece) gradients to sum.
PieceLoss backward_piece(const ModelParams& params, std::span<const TrainingTuple> piece,
                         Gradients& sum) {
  const auto& w = params.weights;
  const auto d_in = static_cast<Eigen::Index>(params.hyper.input_dim);
  Scratch& s = scratch();
  PieceLoss r;
  for (std::size_t start = 0; start < piece.size(); start += kEvalChunk) {
    const auto chunk = piece.subspan(start, std::min(kEvalChunk, piece.size() - start));
    BatchActivations& a = s.a;
    forward_batch(params, chunk, a);
    RowMatrix& d_logits = s.d_logits;
    d_logits = a.probs;
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const auto row = static_cast<Eigen::Index>(b);
      const auto target = static_cast<Eigen::Index>(chunk[b].target);
      const auto ce = log_loss(a.probs(row, target));
      r.loss_sum += ce.value;
      r.clamped += ce.clamped ? 1 : 0;
      d_logits(row, target) -= 1.0;
    }
    if (params.hyper.sigmoid_logits) {
      d_logits.array() *= a.logits.array() * (1.0 - a.logits.array());
    }
    sum.output.noalias() += a.context_act.transpose() * d_logits;
    sum.output_bias += d_logits.colwise().sum().transpose();
    RowMatrix& d_pre = s.d_pre;
    d_pre.noalias() = d_logits * w.output.transpose();
    d_pre.array() *= a.context_act.array() * (1.0 - a.context_act.array());
    sum.context.noalias() += a.merged.transpose() * d_pre;
    sum.context_bias += d_pre.colwise().sum().transpose();
    RowMatrix& d_merged = s.d_merged;
    d_merged.noalias() = d_pre * w.context.transpose();
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const auto row = static_cast<Eigen::Index>(b);
      for (Eigen::Index k = 0; k < 4; ++k) {
        sum.input.row(chunk[b].context[static_cast<std::size_t>(k)]) +=
            d_merged.row(row).segment(k * d_in, d_in);
      }
    }
  }
  return r;
}

std::vector<std::span<const TrainingTuple>> cut(std::span<const TrainingTuple> batch,
                                                unsigned pieces) {
  pieces = std::max(1u, std::min<unsigned>(pieces, static_cast<unsigned>(batch.size())));
  std::vector<std::span<const TrainingTuple>> out;
  const std::size_t per = (batch.size() + pieces - 1) / pieces;
  for (std::size_t start = 0; start < batch.size(); start += per) {
    out.push_back(batch.subspan(start, std::min(per, batch.size() - start)));
  }
  return out;
}

template <typename Fn>
auto run_pieces(const std::vector<std::span<const TrainingTuple>>& pieces, Fn&& fn) {
  using Result = decltype(fn(pieces.front()));
  std::vector<Result> results(pieces.size());
  if (pieces.size() == 1) {
    results[0] = fn(pieces[0]);
    return results;
  }
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    workers.emplace_back([&, i] { results[i] = fn(pieces[i]); });
  }
  for (auto& t : workers) t.join();
  return results;
}

}  // namespace

void ModelHyper::validate() const {
  if (vocab_size == 0) throw std::invalid_argument("vocabulary size must be positive");
  if (input_dim == 0) throw std::invalid_argument("input embedding width must be positive");
  if (context_dim == 0) throw std::invalid_argument("context width must be positive");
}

Weights Weights::zeros(const ModelHyper& hyper) {
  const auto v = static_cast<Eigen::Index>(hyper.vocab_size);
  const auto d_in = static_cast<Eigen::Index>(hyper.input_dim);
  const auto d_ctx = static_cast<Eigen::Index>(hyper.context_dim);
  Weights w;
  w.input = RowMatrix::Zero(static_cast<Eigen::Index>(hyper.input_rows()), d_in);
  w.context = Eigen::MatrixXd::Zero(4 * d_in, d_ctx);
  w.context_bias = Eigen::VectorXd::Zero(d_ctx);
  w.output = Eigen::MatrixXd::Zero(d_ctx, v);
  w.output_bias = Eigen::VectorXd::Zero(v);
  return w;
}

std::array<Weights::View, 5> Weights::views() {
  const auto view = [](std::string_view name, auto& m) {
    return View{name, std::span<double>(m.data(), static_cast<std::size_t>(m.size()))};
  };
  return {view("W_input", input), view("W_ctx", context), view("b_ctx", context_bias),
          view("W_output", output), view("b_out", output_bias)};
}

std::array<Weights::ConstView, 5> Weights::views() const {
  const auto view = [](std::string_view name, const auto& m) {
    return ConstView{name, std::span<const double>(m.data(), static_cast<std::size_t>(m.size()))};
  };
  return {view("W_input", input), view("W_ctx", context), view("b_ctx", context_bias),
          view("W_output", output), view("b_out", output_bias)};
}

ModelParams init_params(const ModelHyper& hyper, std::uint64_t seed) {
  hyper.validate();
  ModelParams p{hyper, Weights::zeros(hyper)};
  SplitMix64 rng(derive_seed(seed, 0));
  fill_glorot(p.weights.input, rng);
  // context and output are column-major in memory; fill_glorot walks
  // row-major by index so the draw order does not depend on storage.
  fill_glorot(p.weights.context, rng);
  fill_glorot(p.weights.output, rng);
  return p;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

ForwardTrace forward(const ModelParams& params, const std::array<TokenId, 4>& context) {
  check_context(params.hyper, context);
  const auto& w = params.weights;
  const auto d_in = static_cast<Eigen::Index>(params.hyper.input_dim);
  ForwardTrace t;
  t.input_embeds.resize(4, d_in);
  t.merged.resize(4 * d_in);
  for (Eigen::Index k = 0; k < 4; ++k) {
    t.input_embeds.row(k) = w.input.row(context[static_cast<std::size_t>(k)]);
    t.merged.segment(k * d_in, d_in) = t.input_embeds.row(k).transpose();
  }
  t.context_pre = w.context.transpose() * t.merged + w.context_bias;
  t.context_act = t.context_pre.unaryExpr(&sigmoid);
  t.logits = w.output.transpose() * t.context_act + w.output_bias;
  if (params.hyper.sigmoid_logits) t.logits = t.logits.unaryExpr(&sigmoid);
  t.probs = softmax(t.logits);
  return t;
}

CrossEntropy cross_entropy(const Eigen::VectorXd& probs, TokenId target) {
  if (target >= probs.size()) {
    throw std::out_of_range("target id " + std::to_string(target) + " outside distribution");
  }
  return log_loss(probs[target]);
}

BackwardResult backward(const ModelParams& params, std::span<const TrainingTuple> batch,
                        unsigned shards) {
  BackwardResult out;
  backward_into(params, batch, shards, out);
  return out;
}

void backward_into(const ModelParams& params, std::span<const TrainingTuple> batch,
                   unsigned shards, BackwardResult& out) {
  if (batch.empty()) throw std::invalid_argument("backward needs a non-empty batch");
  check_tuples(params.hyper, batch);
  zero_like(out.gradients, params.hyper);
  out.mean_loss = 0;
  out.clamped = 0;
  const auto pieces = cut(batch, shards);
  if (pieces.size() == 1) {
    const auto loss = backward_piece(params, pieces[0], out.gradients);
    out.mean_loss = loss.loss_sum;
    out.clamped = loss.clamped;
  } else {
    // Piece 0 accumulates straight into out, the others into their own
    // buffers, which are then added in piece order.
    std::vector<Gradients> sums(pieces.size() - 1);
    for (auto& g : sums) zero_like(g, params.hyper);
    std::vector<PieceLoss> losses(pieces.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 1; i < pieces.size(); ++i) {
      workers.emplace_back([&, i] { losses[i] = backward_piece(params, pieces[i], sums[i - 1]); });
    }
    losses[0] = backward_piece(params, pieces[0], out.gradients);
    for (auto& t : workers) t.join();
    auto dst = out.gradients.views();
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (i > 0) {
        const auto src = std::as_const(sums[i - 1]).views();
        for (std::size_t m = 0; m < dst.size(); ++m) {
          for (std::size_t j = 0; j < dst[m].values.size(); ++j) {
            dst[m].values[j] += src[m].values[j];
          }
        }
      }
      out.mean_loss += losses[i].loss_sum;
      out.clamped += losses[i].clamped;
    }
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (auto& v : out.gradients.views()) {
    for (double& x : v.values) x *= scale;
  }
  out.mean_loss *= scale;
}

LossSummary evaluate_loss(const ModelParams& params, std::span<const TrainingTuple> tuples,
                          unsigned shards) {
  if (tuples.empty()) return {std::nan(""), 0};
  check_tuples(params.hyper, tuples);
  struct Partial {
    double sum = 0;
    std::size_t clamped = 0;
  };
  const auto partials = run_pieces(cut(tuples, shards), [&](std::span<const TrainingTuple> piece) {
    Partial part;
    for (std::size_t start = 0; start < piece.size(); start += kEvalChunk) {
      const auto chunk = piece.subspan(start, std::min(kEvalChunk, piece.size() - start));
      BatchActivations& a = scratch().a;
      forward_batch(params, chunk, a);
      for (std::size_t b = 0; b < chunk.size(); ++b) {
        const auto ce = log_loss(
            a.probs(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(chunk[b].target)));
        part.sum += ce.value;
        part.clamped += ce.clamped ? 1 : 0;
      }
    }
    return part;
  });
  LossSummary s;
  double total = 0;
  for (const auto& p : partials) {
    total += p.sum;
    s.clamped += p.clamped;
  }
  s.mean = total / static_cast<double>(tuples.size());
  return s;
}

}  // namespace tweetembed
