#include "tempowarp/nn.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace tempowarp::nn {

namespace {

Eigen::MatrixXf apply_activation(Activation act, Eigen::MatrixXf pre) {
  switch (act) {
    case Activation::Identity:
      return pre;
    case Activation::Relu:
      return pre.cwiseMax(0.0f);
    case Activation::Tanh:
      return pre.array().tanh().matrix();
  }
  throw ConfigError("unknown activation code");
}

/// Derivative of the activation expressed through its own output value.
Eigen::ArrayXXf activation_grad(Activation act, const Eigen::MatrixXf& out) {
  switch (act) {
    case Activation::Identity:
      return Eigen::ArrayXXf::Ones(out.rows(), out.cols());
    case Activation::Relu:
      return (out.array() > 0.0f).cast<float>();
    case Activation::Tanh:
      return 1.0f - out.array().square();
  }
  throw ConfigError("unknown activation code");
}

void check_batch(const DenseNet& net, const Eigen::MatrixXf& batch) {
  if (net.layers.empty()) throw ConfigError("empty network");
  if (batch.cols() != net.input_dim())
    throw DataError("batch width " + std::to_string(batch.cols()) +
                    " does not match network input dim " +
                    std::to_string(net.input_dim()));
}

}  // namespace

int DenseNet::input_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
}

int DenseNet::output_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void DenseNet::validate() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.size() != l.weight.rows())
      throw ConfigError("layer " + std::to_string(i) + ": bias/weight row mismatch");
    if (i > 0 && layers[i - 1].weight.rows() != l.weight.cols())
      throw ConfigError("layer " + std::to_string(i) + ": input dim does not chain");
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw DataError("layer " + std::to_string(i) + ": non-finite parameters");
  }
}

DenseNet make_mlp(const std::vector<int>& dims,
                  const std::vector<Activation>& activations, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("mlp needs at least input and output dims");
  if (activations.size() != dims.size() - 1)
    throw ConfigError("mlp needs one activation per layer");
  DenseNet net;
  net.layers.resize(dims.size() - 1);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    int fan_in = dims[i], fan_out = dims[i + 1];
    if (fan_in < 1 || fan_out < 1) throw ConfigError("mlp dims must be positive");
    float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    Layer& l = net.layers[i];
    l.weight.resize(fan_out, fan_in);
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        l.weight(r, c) = static_cast<float>(rng.uniform(-limit, limit));
    l.bias = Eigen::VectorXf::Zero(fan_out);
    l.activation = activations[i];
  }
  return net;
}

Eigen::MatrixXf forward(const DenseNet& net, const Eigen::MatrixXf& batch,
                        ForwardTrace* trace) {
  check_batch(net, batch);
  if (!batch.allFinite()) throw DataError("batch contains non-finite entries");
  if (trace) {
    trace->acts.clear();
    trace->masks.assign(net.layers.size(), Eigen::MatrixXf());
    trace->acts.push_back(batch);
  }
  Eigen::MatrixXf x = batch;
  for (const Layer& l : net.layers) {
    Eigen::MatrixXf pre = x * l.weight.transpose();
    pre.rowwise() += l.bias.transpose();
    x = apply_activation(l.activation, std::move(pre));
    if (trace) trace->acts.push_back(x);
  }
  return x;
}

Eigen::MatrixXf forward_train(const DenseNet& net, const Eigen::MatrixXf& batch,
                              std::span<const float> dropout_rates, Rng& rng,
                              ForwardTrace& trace) {
  check_batch(net, batch);
  if (!dropout_rates.empty() && dropout_rates.size() != net.layers.size())
    throw ConfigError("dropout rates must match layer count");
  trace.acts.clear();
  trace.masks.assign(net.layers.size(), Eigen::MatrixXf());
  trace.acts.push_back(batch);
  Eigen::MatrixXf x = batch;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    Eigen::MatrixXf pre = x * l.weight.transpose();
    pre.rowwise() += l.bias.transpose();
    Eigen::MatrixXf act = apply_activation(l.activation, std::move(pre));
    trace.acts.push_back(act);
    float rate = dropout_rates.empty() ? 0.0f : dropout_rates[i];
    if (rate > 0.0f) {
      trace.masks[i] = dropout_mask(act.rows(), act.cols(), rate, rng);
      x = act.cwiseProduct(trace.masks[i]);
    } else {
      x = std::move(act);
    }
  }
  return x;
}

Gradients backward(const DenseNet& net, const ForwardTrace& trace,
                   const Eigen::MatrixXf& output_grad) {
  const std::size_t n = net.layers.size();
  if (trace.acts.size() != n + 1)
    throw DataError("forward trace does not match network depth");
  if (output_grad.rows() != trace.acts.back().rows() ||
      output_grad.cols() != trace.acts.back().cols())
    throw DataError("output gradient shape mismatch");

  Gradients g;
  g.weight.resize(n);
  g.bias.resize(n);

  // delta = gradient w.r.t. layer i's post-dropout output.
  Eigen::MatrixXf delta = output_grad;
  for (std::size_t ii = n; ii-- > 0;) {
    const Layer& l = net.layers[ii];
    if (trace.masks[ii].size() > 0) delta = delta.cwiseProduct(trace.masks[ii]);
    // Through the activation to the pre-activation.
    delta = delta.cwiseProduct(
        activation_grad(l.activation, trace.acts[ii + 1]).matrix());
    // Input that actually fed this layer (post-dropout of the previous one).
    Eigen::MatrixXf fed;
    const Eigen::MatrixXf& prev = trace.acts[ii];
    if (ii > 0 && trace.masks[ii - 1].size() > 0)
      fed = prev.cwiseProduct(trace.masks[ii - 1]);
    const Eigen::MatrixXf& input = (ii > 0 && trace.masks[ii - 1].size() > 0) ? fed : prev;
    g.weight[ii] = delta.transpose() * input;
    g.bias[ii] = delta.colwise().sum().transpose();
    delta = delta * l.weight;  // now w.r.t. previous layer's (masked) output
  }
  g.input = std::move(delta);
  return g;
}

LossResult translation_loss(const Eigen::MatrixXf& predicted,
                            const Eigen::MatrixXf& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols())
    throw DataError("translation loss: shape mismatch");
  const Eigen::Index b = predicted.rows();
  const Eigen::Index d = predicted.cols();
  if (b == 0 || d == 0) throw DataError("translation loss: empty batch");

  LossResult res;
  res.grad.resize(b, d);
  double total = 0.0;
  const float inv_b = 1.0f / static_cast<float>(b);
  const float inv_d = 1.0f / static_cast<float>(d);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto p = predicted.row(i);
    const auto t = target.row(i);
    const float pn = p.norm();
    const float tn = t.norm();
    if (pn == 0.0f || tn == 0.0f)
      throw DataError("translation loss: degenerate zero-norm vector in batch row " +
                      std::to_string(i));
    const float dot = p.dot(t);
    const float cos = dot / (pn * tn);
    const float mse = (p - t).squaredNorm() * inv_d;
    total += (1.0f - cos) + mse;
    // d(1 - cos)/dp = -(t/(|p||t|) - cos * p/|p|^2); dMSE/dp = (2/D)(p - t).
    res.grad.row(i) =
        (-(t / (pn * tn) - (cos / (pn * pn)) * p) + 2.0f * inv_d * (p - t)) * inv_b;
  }
  res.value = static_cast<float>(total / static_cast<double>(b));
  return res;
}

Eigen::MatrixXf softmax(const Eigen::MatrixXf& logits) {
  Eigen::MatrixXf out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const float mx = logits.row(i).maxCoeff();
    Eigen::ArrayXf e = (logits.row(i).array() - mx).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

LossResult softmax_cross_entropy(const Eigen::MatrixXf& logits,
                                 std::span<const int> classes) {
  const Eigen::Index b = logits.rows();
  const Eigen::Index c = logits.cols();
  if (static_cast<Eigen::Index>(classes.size()) != b)
    throw DataError("cross entropy: one class label per row required");
  for (int cls : classes)
    if (cls < 0 || cls >= c)
      throw DataError("cross entropy: class label " + std::to_string(cls) +
                      " outside [0, " + std::to_string(c) + ")");

  LossResult res;
  res.grad.resize(b, c);
  double total = 0.0;
  const float inv_b = 1.0f / static_cast<float>(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const float mx = logits.row(i).maxCoeff();
    Eigen::ArrayXf shifted = logits.row(i).array() - mx;
    const float log_z = std::log(shifted.exp().sum());
    total += log_z - shifted[classes[i]];
    Eigen::ArrayXf p = (shifted - log_z).exp();
    p[classes[i]] -= 1.0f;
    res.grad.row(i) = (p * inv_b).matrix().transpose();
  }
  res.value = static_cast<float>(total / static_cast<double>(b));
  return res;
}

AdamState AdamState::init(const DenseNet& net) {
  AdamState s;
  for (const Layer& l : net.layers) {
    s.m_weight.emplace_back(Eigen::MatrixXf::Zero(l.weight.rows(), l.weight.cols()));
    s.v_weight.emplace_back(Eigen::MatrixXf::Zero(l.weight.rows(), l.weight.cols()));
    s.m_bias.emplace_back(Eigen::VectorXf::Zero(l.bias.size()));
    s.v_bias.emplace_back(Eigen::VectorXf::Zero(l.bias.size()));
  }
  return s;
}

namespace {

template <typename Mat>
void adam_update(Mat& param, const Mat& grad, Mat& m, Mat& v, float lr,
                 float beta1, float beta2, float eps, float corr1, float corr2) {
  if (!grad.allFinite())
    throw DivergenceError("adam: non-finite gradient");
  m = beta1 * m + (1.0f - beta1) * grad;
  v = beta2 * v + (1.0f - beta2) * grad.cwiseProduct(grad);
  param.array() -=
      lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + eps);
}

}  // namespace

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state,
               float lr) {
  const std::size_t n = net.layers.size();
  if (grads.weight.size() != n || grads.bias.size() != n ||
      state.m_weight.size() != n)
    throw DataError("adam: gradient/state layer count mismatch");
  state.step_count += 1;
  const float corr1 = 1.0f - std::pow(state.beta1, static_cast<float>(state.step_count));
  const float corr2 = 1.0f - std::pow(state.beta2, static_cast<float>(state.step_count));
  for (std::size_t i = 0; i < n; ++i) {
    if (grads.weight[i].rows() != net.layers[i].weight.rows() ||
        grads.weight[i].cols() != net.layers[i].weight.cols() ||
        grads.bias[i].size() != net.layers[i].bias.size())
      throw DataError("adam: gradient shape mismatch at layer " + std::to_string(i));
    adam_update(net.layers[i].weight, grads.weight[i], state.m_weight[i],
                state.v_weight[i], lr, state.beta1, state.beta2, state.epsilon,
                corr1, corr2);
    adam_update(net.layers[i].bias, grads.bias[i], state.m_bias[i],
                state.v_bias[i], lr, state.beta1, state.beta2, state.epsilon,
                corr1, corr2);
  }
}

void LrSchedule::validate() const {
  if (total_steps < 1) throw ConfigError("lr schedule: total_steps must be >= 1");
  if (warmup_steps < 0 || warmup_steps >= total_steps)
    throw ConfigError("lr schedule: need 0 <= warmup_steps < total_steps");
  if (!(peak_lr >= 0.0f)) throw ConfigError("lr schedule: peak_lr must be >= 0");
}

float lr_at(const LrSchedule& schedule, std::int64_t step) {
  schedule.validate();
  if (step < 0) throw DataError("lr schedule: negative step");
  if (step >= schedule.total_steps) return 0.0f;  // annealed floor
  if (step < schedule.warmup_steps)
    return schedule.peak_lr * static_cast<float>(step) /
           static_cast<float>(schedule.warmup_steps);
  const double phase =
      static_cast<double>(step - schedule.warmup_steps) /
      static_cast<double>(schedule.total_steps - schedule.warmup_steps);
  return schedule.peak_lr *
         static_cast<float>(0.5 * (1.0 + std::cos(std::numbers::pi * phase)));
}

Eigen::MatrixXf dropout_mask(Eigen::Index rows, Eigen::Index cols,
                             float drop_rate, Rng& rng) {
  if (!(drop_rate >= 0.0f) || drop_rate >= 1.0f)
    throw ConfigError("dropout rate must lie in [0, 1)");
  Eigen::MatrixXf mask(rows, cols);
  const float keep_scale = 1.0f / (1.0f - drop_rate);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      mask(i, j) = rng.uniform() < drop_rate ? 0.0f : keep_scale;
  return mask;
}

Eigen::MatrixXf dropout_apply(const Eigen::MatrixXf& batch, float drop_rate,
                              Rng& rng) {
  if (drop_rate == 0.0f) return batch;
  return batch.cwiseProduct(dropout_mask(batch.rows(), batch.cols(), drop_rate, rng));
}

}  // namespace tempowarp::nn
