#pragma once

// Center-word prediction network over four context words:
//
//   lookup   e_k = W_input[c_k]                      (shared, no bias)
//   merge    x = [e_0; e_1; e_2; e_3]                (position-preserving)
//   context  h = sigmoid(W_ctx^T x + b_ctx)
//   output   z = W_output^T h + b_out                (or sigmoid(.) with sigmoid_logits)
//   softmax  p = softmax(z)
//
// Columns of W_output are the word embeddings.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "tweetembed/dataset.hpp"

namespace tweetembed {

inline constexpr std::size_t kContextWidth = 4;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelHyper {
  std::size_t vocab_size = 0;
  std::size_t input_dim = 64;
  std::size_t context_dim = 64;
  bool sigmoid_logits = false;

  // Vocabulary rows plus one per boundary token.
  std::size_t input_rows() const { return vocab_size + kBoundaryTokens.size(); }
  // Throws std::invalid_argument on a zero dimension.
  void validate() const;

  bool operator==(const ModelHyper&) const = default;
};

// Parameter-shaped storage; also used for gradients and Adam moments.
struct Weights {
  RowMatrix input;                // (|V| + 4) x d_in, one row per token
  Eigen::MatrixXd context;        // (4 d_in) x d_ctx
  Eigen::VectorXd context_bias;   // d_ctx
  Eigen::MatrixXd output;         // d_ctx x |V|, one column per word
  Eigen::VectorXd output_bias;    // |V|

  static Weights zeros(const ModelHyper& hyper);

  struct View {
    std::string_view name;
    std::span<double> values;
  };
  struct ConstView {
    std::string_view name;
    std::span<const double> values;
  };
  std::array<View, 5> views();
  std::array<ConstView, 5> views() const;

  bool operator==(const Weights&) const = default;
};

struct ModelParams {
  ModelHyper hyper;
  Weights weights;
};

using Gradients = Weights;

// Glorot-uniform weights, U(-a, a) with a = sqrt(6 / (rows + cols)) per
// matrix, drawn row-major in the order input, context, output from
// SplitMix64(derive_seed(seed, 0)). Biases start at zero.
ModelParams init_params(const ModelHyper& hyper, std::uint64_t seed);

struct ForwardTrace {
  Eigen::MatrixXd input_embeds;  // 4 x d_in
  Eigen::VectorXd merged;        // 4 d_in
  Eigen::VectorXd context_pre;
  Eigen::VectorXd context_act;
  Eigen::VectorXd logits;
  Eigen::VectorXd probs;
};

// Throws std::out_of_range for a context id >= |V| + 4.
ForwardTrace forward(const ModelParams& params, const std::array<TokenId, 4>& context);

// Numerically stable softmax (max subtracted).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

inline constexpr double kProbabilityFloor = 1e-12;

struct CrossEntropy {
  double value = 0;
  bool clamped = false;
};

// -ln(probs[target]) with probs[target] floored at 1e-12.
CrossEntropy cross_entropy(const Eigen::VectorXd& probs, TokenId target);

struct BackwardResult {
  Gradients gradients;
  double mean_loss = 0;
  std::size_t clamped = 0;
};

// Exact gradient of the mean cross-entropy over batch. With shards > 1 the
// batch is cut into that many contiguous pieces evaluated concurrently; the
// piece sums are always reduced in piece order.
BackwardResult backward(const ModelParams& params, std::span<const TrainingTuple> batch,
                        unsigned shards = 1);
// Same result, written into out; reuses out.gradients when it already has
// the right shapes.
void backward_into(const ModelParams& params, std::span<const TrainingTuple> batch,
                   unsigned shards, BackwardResult& out);

struct LossSummary {
  double mean = 0;
  std::size_t clamped = 0;
};

// Mean cross-entropy over tuples, evaluated in chunks. NaN when empty.
LossSummary evaluate_loss(const ModelParams& params, std::span<const TrainingTuple> tuples,
                          unsigned shards = 1);

}  // namespace tweetembed
