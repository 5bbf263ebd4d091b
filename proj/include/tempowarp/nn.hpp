#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "tempowarp/common.hpp"

namespace tempowarp::nn {

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Tanh = 2 };

struct Layer {
  Eigen::MatrixXf weight;  // out x in
  Eigen::VectorXf bias;    // out
  Activation activation = Activation::Identity;
};

/// Plain dense MLP. Batches are row-major: one sample per row.
struct DenseNet {
  std::vector<Layer> layers;

  int input_dim() const;
  int output_dim() const;
  std::size_t parameter_count() const;
  void validate() const;  // dimension chaining + finite parameters
};

/// Glorot-uniform initialized MLP; dims = {in, hidden..., out} and one
/// activation per layer.
DenseNet make_mlp(const std::vector<int>& dims,
                  const std::vector<Activation>& activations, Rng& rng);

/// Per-layer state captured by forward for the backward pass.
/// acts[0] is the input batch; acts[i+1] is layer i's post-activation output
/// before dropout. masks[i], when non-empty, holds the scaled dropout mask
/// applied to layer i's output on the way into layer i+1.
struct ForwardTrace {
  std::vector<Eigen::MatrixXf> acts;
  std::vector<Eigen::MatrixXf> masks;
};

/// Deterministic inference forward pass. Batch width must equal input_dim.
Eigen::MatrixXf forward(const DenseNet& net, const Eigen::MatrixXf& batch,
                        ForwardTrace* trace = nullptr);

/// Training forward pass with optional inverted dropout per layer output
/// (dropout_rates may be empty = none; rate 0 disables a layer's mask).
Eigen::MatrixXf forward_train(const DenseNet& net, const Eigen::MatrixXf& batch,
                              std::span<const float> dropout_rates, Rng& rng,
                              ForwardTrace& trace);

struct Gradients {
  std::vector<Eigen::MatrixXf> weight;
  std::vector<Eigen::VectorXf> bias;
  Eigen::MatrixXf input;  // gradient w.r.t. the input batch
};

/// Chain rule through the trace produced by a matching forward call.
/// output_grad is d(loss)/d(final output), one row per sample.
Gradients backward(const DenseNet& net, const ForwardTrace& trace,
                   const Eigen::MatrixXf& output_grad);

struct LossResult {
  float value = 0.0f;
  Eigen::MatrixXf grad;  // w.r.t. the first argument
};

/// Batch mean of (1 - cos(p, t)) + (1/D) * ||p - t||^2. Rows with zero norm
/// on either side are degenerate and rejected.
LossResult translation_loss(const Eigen::MatrixXf& predicted,
                            const Eigen::MatrixXf& target);

/// Numerically stable (max-subtracted) softmax cross-entropy, batch mean.
LossResult softmax_cross_entropy(const Eigen::MatrixXf& logits,
                                 std::span<const int> classes);

/// Row-wise softmax.
Eigen::MatrixXf softmax(const Eigen::MatrixXf& logits);

struct AdamState {
  std::vector<Eigen::MatrixXf> m_weight, v_weight;
  std::vector<Eigen::VectorXf> m_bias, v_bias;
  std::int64_t step_count = 0;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;

  static AdamState init(const DenseNet& net);
};

/// One bias-corrected Adam update. Throws DivergenceError on non-finite
/// gradients.
void adam_step(DenseNet& net, const Gradients& grads, AdamState& state,
               float lr);

/// Linear warmup to peak_lr over warmup_steps, then cosine decay to 0 at
/// total_steps; 0 beyond.
struct LrSchedule {
  float peak_lr = 1e-3f;
  std::int64_t warmup_steps = 0;
  std::int64_t total_steps = 1;

  void validate() const;
};

float lr_at(const LrSchedule& schedule, std::int64_t step);

/// Scaled dropout mask: entries are 0 with probability drop_rate and
/// 1/(1 - drop_rate) otherwise.
Eigen::MatrixXf dropout_mask(Eigen::Index rows, Eigen::Index cols,
                             float drop_rate, Rng& rng);

/// Inverted dropout on a batch (training-time only; evaluation paths bypass
/// this entirely).
Eigen::MatrixXf dropout_apply(const Eigen::MatrixXf& batch, float drop_rate,
                              Rng& rng);

}  // namespace tempowarp::nn
