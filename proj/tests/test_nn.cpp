#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tempowarp/nn.hpp"

using namespace tempowarp;
using nn::Activation;
using nn::DenseNet;

namespace {

// Double-precision shadow of a DenseNet. Finite differences are computed on
// this replica so truncation error is the only error term; the analytic
// float gradients from backward() are compared against it.
struct ShadowNet {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  std::vector<Activation> act;
};

ShadowNet shadow_of(const DenseNet& net) {
  ShadowNet s;
  for (const auto& l : net.layers) {
    s.w.push_back(l.weight.cast<double>());
    s.b.push_back(l.bias.cast<double>());
    s.act.push_back(l.activation);
  }
  return s;
}

Eigen::MatrixXd shadow_forward(const ShadowNet& net, Eigen::MatrixXd x,
                               const std::vector<Eigen::MatrixXd>& masks = {}) {
  for (std::size_t i = 0; i < net.w.size(); ++i) {
    Eigen::MatrixXd z =
        (x * net.w[i].transpose()).rowwise() + net.b[i].transpose();
    switch (net.act[i]) {
      case Activation::Identity: x = z; break;
      case Activation::Relu: x = z.cwiseMax(0.0); break;
      case Activation::Tanh: x = z.array().tanh().matrix(); break;
    }
    if (i < masks.size() && masks[i].size() > 0) x = x.cwiseProduct(masks[i]);
  }
  return x;
}

double shadow_translation_loss(const Eigen::MatrixXd& p,
                               const Eigen::MatrixXd& t) {
  double total = 0.0;
  const double d = static_cast<double>(p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double cos = p.row(i).dot(t.row(i)) / (p.row(i).norm() * t.row(i).norm());
    total += (1.0 - cos) + (p.row(i) - t.row(i)).squaredNorm() / d;
  }
  return total / static_cast<double>(p.rows());
}

double shadow_softmax_ce(const Eigen::MatrixXd& logits,
                         const std::vector<int>& classes) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    Eigen::ArrayXd shifted = logits.row(i).array() - mx;
    total += std::log(shifted.exp().sum()) - shifted[classes[i]];
  }
  return total / static_cast<double>(logits.rows());
}

Eigen::MatrixXf random_batch(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXf x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      x(i, j) = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

// Central finite difference over one parameter of the shadow net.
double fd_param(const ShadowNet& base, std::size_t layer, bool is_bias, int r,
                int c, const std::function<double(const ShadowNet&)>& loss) {
  const double h = 1e-5;
  ShadowNet plus = base, minus = base;
  if (is_bias) {
    plus.b[layer](r) += h;
    minus.b[layer](r) -= h;
  } else {
    plus.w[layer](r, c) += h;
    minus.w[layer](r, c) -= h;
  }
  return (loss(plus) - loss(minus)) / (2.0 * h);
}

void check_close(double analytic, double fd) {
  CHECK(std::abs(analytic - fd) < 1e-4 + 1e-3 * std::abs(fd));
}

}  // namespace

TEST_CASE("mlp construction: shapes, zero bias, Glorot bounds") {
  Rng rng(3);
  DenseNet net = nn::make_mlp({3, 5, 2}, {Activation::Relu, Activation::Identity}, rng);
  REQUIRE(net.layers.size() == 2);
  CHECK(net.input_dim() == 3);
  CHECK(net.output_dim() == 2);
  CHECK(net.parameter_count() == 5 * 3 + 5 + 2 * 5 + 2);
  CHECK(net.layers[0].weight.rows() == 5);
  CHECK(net.layers[0].weight.cols() == 3);
  CHECK(net.layers[0].bias.isZero());
  CHECK(net.layers[1].bias.isZero());
  const float lim0 = std::sqrt(6.0f / (3 + 5));
  const float lim1 = std::sqrt(6.0f / (5 + 2));
  CHECK(net.layers[0].weight.cwiseAbs().maxCoeff() <= lim0);
  CHECK(net.layers[1].weight.cwiseAbs().maxCoeff() <= lim1);
  CHECK_NOTHROW(net.validate());
}

TEST_CASE("network validation catches broken shapes and parameters") {
  Rng rng(4);
  DenseNet net = nn::make_mlp({3, 4, 2}, {Activation::Relu, Activation::Identity}, rng);
  SUBCASE("dimension chain break") {
    net.layers[1].weight.resize(2, 7);
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("non-finite parameter") {
    net.layers[0].weight(0, 0) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(net.validate(), DataError);
  }
  SUBCASE("empty network") {
    net.layers.clear();
    CHECK_THROWS_AS(net.validate(), ConfigError);
  }
  SUBCASE("mlp argument checks") {
    CHECK_THROWS_AS(nn::make_mlp({3}, {}, rng), ConfigError);
    CHECK_THROWS_AS(nn::make_mlp({3, 2}, {}, rng), ConfigError);
    CHECK_THROWS_AS(nn::make_mlp({3, 0}, {Activation::Identity}, rng), ConfigError);
  }
}

TEST_CASE("forward pass hand values per activation") {
  DenseNet net;
  nn::Layer l;
  l.weight = Eigen::MatrixXf::Constant(1, 1, 2.0f);
  l.bias = Eigen::VectorXf::Constant(1, 3.0f);

  Eigen::MatrixXf x = Eigen::MatrixXf::Constant(1, 1, -4.0f);
  SUBCASE("identity") {
    l.activation = Activation::Identity;
    net.layers = {l};
    CHECK(nn::forward(net, x)(0, 0) == doctest::Approx(-5.0f));
  }
  SUBCASE("relu clamps") {
    l.activation = Activation::Relu;
    net.layers = {l};
    CHECK(nn::forward(net, x)(0, 0) == 0.0f);
  }
  SUBCASE("tanh") {
    l.activation = Activation::Tanh;
    net.layers = {l};
    CHECK(nn::forward(net, x)(0, 0) == doctest::Approx(std::tanh(-5.0f)));
  }
}

TEST_CASE("forward pass input guards") {
  Rng rng(5);
  DenseNet net = nn::make_mlp({3, 2}, {Activation::Identity}, rng);
  CHECK_THROWS_AS(nn::forward(net, random_batch(4, 5, 1)), DataError);
  Eigen::MatrixXf bad = random_batch(2, 3, 2);
  bad(1, 1) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(nn::forward(net, bad), DataError);
}

TEST_CASE("backward matches finite differences through the translation loss") {
  Rng rng(17);
  DenseNet net = nn::make_mlp({3, 4, 2}, {Activation::Relu, Activation::Identity}, rng);
  const Eigen::MatrixXf x = random_batch(5, 3, 21);
  const Eigen::MatrixXf target = random_batch(5, 2, 22).array() + 1.5f;  // away from 0

  nn::ForwardTrace trace;
  const Eigen::MatrixXf out = nn::forward(net, x, &trace);
  const nn::LossResult loss = nn::translation_loss(out, target);
  const nn::Gradients grads = nn::backward(net, trace, loss.grad);

  const ShadowNet shadow = shadow_of(net);
  const Eigen::MatrixXd xd = x.cast<double>();
  const Eigen::MatrixXd td = target.cast<double>();
  auto loss_of = [&](const ShadowNet& s) {
    return shadow_translation_loss(shadow_forward(s, xd), td);
  };

  Rng pick(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto li = static_cast<std::size_t>(pick.below(net.layers.size()));
    const auto& layer = net.layers[li];
    const bool is_bias = pick.uniform() < 0.2;
    const int r = static_cast<int>(pick.below(static_cast<std::uint64_t>(layer.weight.rows())));
    const int c = is_bias ? 0
                          : static_cast<int>(pick.below(
                                static_cast<std::uint64_t>(layer.weight.cols())));
    const double fd = fd_param(shadow, li, is_bias, r, c, loss_of);
    const double analytic = is_bias ? grads.bias[li](r) : grads.weight[li](r, c);
    check_close(analytic, fd);
  }
}

TEST_CASE("backward matches finite differences through softmax cross-entropy") {
  Rng rng(31);
  DenseNet net = nn::make_mlp({4, 6, 3}, {Activation::Tanh, Activation::Identity}, rng);
  const Eigen::MatrixXf x = random_batch(6, 4, 41);
  std::vector<int> classes = {0, 2, 1, 1, 0, 2};

  nn::ForwardTrace trace;
  const Eigen::MatrixXf logits = nn::forward(net, x, &trace);
  const nn::LossResult loss = nn::softmax_cross_entropy(logits, classes);
  const nn::Gradients grads = nn::backward(net, trace, loss.grad);

  const ShadowNet shadow = shadow_of(net);
  const Eigen::MatrixXd xd = x.cast<double>();
  auto loss_of = [&](const ShadowNet& s) {
    return shadow_softmax_ce(shadow_forward(s, xd), classes);
  };

  Rng pick(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto li = static_cast<std::size_t>(pick.below(net.layers.size()));
    const auto& layer = net.layers[li];
    const bool is_bias = pick.uniform() < 0.2;
    const int r = static_cast<int>(pick.below(static_cast<std::uint64_t>(layer.weight.rows())));
    const int c = is_bias ? 0
                          : static_cast<int>(pick.below(
                                static_cast<std::uint64_t>(layer.weight.cols())));
    const double fd = fd_param(shadow, li, is_bias, r, c, loss_of);
    const double analytic = is_bias ? grads.bias[li](r) : grads.weight[li](r, c);
    check_close(analytic, fd);
  }
}

TEST_CASE("backward input gradient matches finite differences") {
  Rng rng(53);
  DenseNet net = nn::make_mlp({3, 5, 2}, {Activation::Tanh, Activation::Identity}, rng);
  const Eigen::MatrixXf x = random_batch(4, 3, 54);
  const Eigen::MatrixXf target = random_batch(4, 2, 55).array() + 1.5f;

  nn::ForwardTrace trace;
  const Eigen::MatrixXf out = nn::forward(net, x, &trace);
  const nn::LossResult loss = nn::translation_loss(out, target);
  const nn::Gradients grads = nn::backward(net, trace, loss.grad);
  REQUIRE(grads.input.rows() == 4);
  REQUIRE(grads.input.cols() == 3);

  const ShadowNet shadow = shadow_of(net);
  const Eigen::MatrixXd td = target.cast<double>();
  const double h = 1e-5;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 3; ++c) {
      Eigen::MatrixXd plus = x.cast<double>(), minus = x.cast<double>();
      plus(r, c) += h;
      minus(r, c) -= h;
      const double fd = (shadow_translation_loss(shadow_forward(shadow, plus), td) -
                         shadow_translation_loss(shadow_forward(shadow, minus), td)) /
                        (2.0 * h);
      check_close(grads.input(r, c), fd);
    }
  }
}

TEST_CASE("backward respects dropout masks from the training forward") {
  Rng rng(61);
  DenseNet net = nn::make_mlp({3, 8, 2}, {Activation::Relu, Activation::Identity}, rng);
  const Eigen::MatrixXf x = random_batch(5, 3, 62);
  const Eigen::MatrixXf target = random_batch(5, 2, 63).array() + 1.5f;
  const std::vector<float> rates = {0.5f, 0.0f};

  Rng drop_rng(7);
  nn::ForwardTrace trace;
  const Eigen::MatrixXf out = nn::forward_train(net, x, rates, drop_rng, trace);
  const nn::LossResult loss = nn::translation_loss(out, target);
  const nn::Gradients grads = nn::backward(net, trace, loss.grad);

  // Replay the captured masks inside the double-precision replica.
  std::vector<Eigen::MatrixXd> masks;
  for (const auto& m : trace.masks)
    masks.push_back(m.size() > 0 ? m.cast<double>() : Eigen::MatrixXd());
  const ShadowNet shadow = shadow_of(net);
  const Eigen::MatrixXd xd = x.cast<double>();
  const Eigen::MatrixXd td = target.cast<double>();
  auto loss_of = [&](const ShadowNet& s) {
    return shadow_translation_loss(shadow_forward(s, xd, masks), td);
  };

  Rng pick(13);
  for (int trial = 0; trial < 60; ++trial) {
    const auto li = static_cast<std::size_t>(pick.below(net.layers.size()));
    const auto& layer = net.layers[li];
    const bool is_bias = pick.uniform() < 0.2;
    const int r = static_cast<int>(pick.below(static_cast<std::uint64_t>(layer.weight.rows())));
    const int c = is_bias ? 0
                          : static_cast<int>(pick.below(
                                static_cast<std::uint64_t>(layer.weight.cols())));
    const double fd = fd_param(shadow, li, is_bias, r, c, loss_of);
    const double analytic = is_bias ? grads.bias[li](r) : grads.weight[li](r, c);
    check_close(analytic, fd);
  }
}

TEST_CASE("forward_train without dropout equals plain forward") {
  Rng rng(71);
  DenseNet net = nn::make_mlp({4, 6, 3}, {Activation::Relu, Activation::Identity}, rng);
  const Eigen::MatrixXf x = random_batch(5, 4, 72);
  Rng drop_rng(1);
  nn::ForwardTrace trace;
  const Eigen::MatrixXf a = nn::forward_train(net, x, {}, drop_rng, trace);
  const Eigen::MatrixXf b = nn::forward(net, x);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0f);

  const std::vector<float> zero_rates = {0.0f, 0.0f};
  nn::ForwardTrace trace2;
  Rng drop_rng2(1);
  const Eigen::MatrixXf c = nn::forward_train(net, x, zero_rates, drop_rng2, trace2);
  CHECK((c - b).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("translation loss hand values") {
  Eigen::MatrixXf t(1, 2);
  t << 3.0f, 4.0f;
  SUBCASE("identical rows give zero loss") {
    const auto res = nn::translation_loss(t, t);
    CHECK(res.value == doctest::Approx(0.0f));
    CHECK(res.grad.cwiseAbs().maxCoeff() < 1e-6f);
  }
  SUBCASE("scaled copy keeps the cosine term flat") {
    Eigen::MatrixXf p(1, 2);
    p << 2.0f, 0.0f;
    Eigen::MatrixXf q(1, 2);
    q << 1.0f, 0.0f;
    const auto res = nn::translation_loss(p, q);
    // cos = 1, ||p - q||^2 / D = 1/2; cosine gradient vanishes, l2 gives
    // (2/D)(p - q) = (1, 0).
    CHECK(res.value == doctest::Approx(0.5f));
    CHECK(res.grad(0, 0) == doctest::Approx(1.0f));
    CHECK(res.grad(0, 1) == doctest::Approx(0.0f));
  }
  SUBCASE("orthogonal unit rows") {
    Eigen::MatrixXf p(1, 2);
    p << 1.0f, 0.0f;
    Eigen::MatrixXf q(1, 2);
    q << 0.0f, 1.0f;
    CHECK(nn::translation_loss(p, q).value == doctest::Approx(2.0f));
  }
  SUBCASE("batch mean over rows") {
    Eigen::MatrixXf p(2, 2), q(2, 2);
    p << 2.0f, 0.0f, 1.0f, 0.0f;
    q << 1.0f, 0.0f, 0.0f, 1.0f;
    CHECK(nn::translation_loss(p, q).value == doctest::Approx(1.25f));
  }
  SUBCASE("degenerate rows and shapes are rejected") {
    Eigen::MatrixXf z = Eigen::MatrixXf::Zero(1, 2);
    CHECK_THROWS_AS(nn::translation_loss(z, t), DataError);
    CHECK_THROWS_AS(nn::translation_loss(t, z), DataError);
    Eigen::MatrixXf wide(1, 3);
    wide << 1.0f, 2.0f, 3.0f;
    CHECK_THROWS_AS(nn::translation_loss(t, wide), DataError);
  }
}

TEST_CASE("softmax cross-entropy hand values and stability") {
  SUBCASE("uniform two-way logits cost ln 2") {
    Eigen::MatrixXf logits = Eigen::MatrixXf::Zero(1, 2);
    const auto res = nn::softmax_cross_entropy(logits, std::vector<int>{0});
    CHECK(res.value == doctest::Approx(std::log(2.0f)));
    CHECK(res.grad(0, 0) == doctest::Approx(-0.5f));
    CHECK(res.grad(0, 1) == doctest::Approx(0.5f));
  }
  SUBCASE("huge logits stay finite") {
    Eigen::MatrixXf logits = Eigen::MatrixXf::Constant(1, 2, 1000.0f);
    const auto res = nn::softmax_cross_entropy(logits, std::vector<int>{1});
    CHECK(res.value == doctest::Approx(std::log(2.0f)));
    CHECK(std::isfinite(res.value));
  }
  SUBCASE("confidently wrong pays the full margin") {
    Eigen::MatrixXf logits(1, 2);
    logits << -1000.0f, 0.0f;
    const auto res = nn::softmax_cross_entropy(logits, std::vector<int>{0});
    CHECK(res.value == doctest::Approx(1000.0f));
  }
  SUBCASE("batch mean") {
    Eigen::MatrixXf logits(2, 2);
    logits << 0.0f, 0.0f, 0.0f, std::log(3.0f);
    const auto res = nn::softmax_cross_entropy(logits, std::vector<int>{0, 1});
    const float want = 0.5f * (std::log(2.0f) + std::log(4.0f / 3.0f));
    CHECK(res.value == doctest::Approx(want));
  }
  SUBCASE("label validation") {
    Eigen::MatrixXf logits = Eigen::MatrixXf::Zero(1, 2);
    CHECK_THROWS_AS(nn::softmax_cross_entropy(logits, std::vector<int>{2}), DataError);
    CHECK_THROWS_AS(nn::softmax_cross_entropy(logits, std::vector<int>{-1}), DataError);
    CHECK_THROWS_AS(nn::softmax_cross_entropy(logits, std::vector<int>{0, 1}), DataError);
  }
}

TEST_CASE("softmax rows") {
  Eigen::MatrixXf logits(2, 2);
  logits << 0.0f, std::log(3.0f), 1000.0f, 1000.0f + std::log(4.0f);
  const Eigen::MatrixXf p = nn::softmax(logits);
  CHECK(p(0, 0) == doctest::Approx(0.25f));
  CHECK(p(0, 1) == doctest::Approx(0.75f));
  CHECK(p(1, 0) == doctest::Approx(0.2f));
  CHECK(p(1, 1) == doctest::Approx(0.8f));
  CHECK(p.row(0).sum() == doctest::Approx(1.0f));
  CHECK(p.row(1).sum() == doctest::Approx(1.0f));
}

TEST_CASE("adam matches a hand-stepped double-precision oracle") {
  DenseNet net;
  nn::Layer l;
  l.weight = Eigen::MatrixXf::Constant(1, 1, 1.0f);
  l.bias = Eigen::VectorXf::Constant(1, -0.5f);
  l.activation = Activation::Identity;
  net.layers = {l};
  nn::AdamState state = nn::AdamState::init(net);

  const std::vector<float> wgrads = {0.5f, -0.3f, 0.2f, 0.9f, -1.1f};
  const std::vector<float> bgrads = {0.1f, 0.4f, -0.2f, 0.0f, 0.3f};
  const float lr = 0.1f;

  double w = 1.0, b = -0.5;
  double mw = 0.0, vw = 0.0, mb = 0.0, vb = 0.0;
  for (std::size_t t = 0; t < wgrads.size(); ++t) {
    nn::Gradients g;
    g.weight = {Eigen::MatrixXf::Constant(1, 1, wgrads[t])};
    g.bias = {Eigen::VectorXf::Constant(1, bgrads[t])};
    nn::adam_step(net, g, state, lr);

    const double corr1 = 1.0 - std::pow(0.9, static_cast<double>(t) + 1.0);
    const double corr2 = 1.0 - std::pow(0.999, static_cast<double>(t) + 1.0);
    mw = 0.9 * mw + 0.1 * wgrads[t];
    vw = 0.999 * vw + 0.001 * wgrads[t] * wgrads[t];
    w -= lr * (mw / corr1) / (std::sqrt(vw / corr2) + 1e-8);
    mb = 0.9 * mb + 0.1 * bgrads[t];
    vb = 0.999 * vb + 0.001 * bgrads[t] * bgrads[t];
    b -= lr * (mb / corr1) / (std::sqrt(vb / corr2) + 1e-8);
  }
  CHECK(net.layers[0].weight(0, 0) == doctest::Approx(w).epsilon(1e-5));
  CHECK(net.layers[0].bias(0) == doctest::Approx(b).epsilon(1e-5));
  CHECK(state.step_count == 5);

  // First-step magnitude sanity: bias-corrected Adam moves by ~lr.
  DenseNet fresh;
  fresh.layers = {l};
  nn::AdamState fs = nn::AdamState::init(fresh);
  nn::Gradients g;
  g.weight = {Eigen::MatrixXf::Constant(1, 1, 0.5f)};
  g.bias = {Eigen::VectorXf::Zero(1)};
  nn::adam_step(fresh, g, fs, 0.1f);
  CHECK(fresh.layers[0].weight(0, 0) == doctest::Approx(0.9f).epsilon(1e-5));
}

TEST_CASE("adam rejects divergent and mismatched gradients") {
  Rng rng(81);
  DenseNet net = nn::make_mlp({2, 2}, {Activation::Identity}, rng);
  nn::AdamState state = nn::AdamState::init(net);
  nn::Gradients g;
  g.weight = {Eigen::MatrixXf::Constant(2, 2, std::numeric_limits<float>::quiet_NaN())};
  g.bias = {Eigen::VectorXf::Zero(2)};
  CHECK_THROWS_AS(nn::adam_step(net, g, state, 0.1f), DivergenceError);

  nn::Gradients wrong;
  wrong.weight = {Eigen::MatrixXf::Zero(3, 2)};
  wrong.bias = {Eigen::VectorXf::Zero(2)};
  CHECK_THROWS_AS(nn::adam_step(net, wrong, state, 0.1f), DataError);
  CHECK_THROWS_AS(nn::adam_step(net, nn::Gradients{}, state, 0.1f), DataError);
}

TEST_CASE("learning-rate schedule anchors") {
  nn::LrSchedule s;
  s.peak_lr = 1e-3f;
  s.warmup_steps = 2000;
  s.total_steps = 200000;
  CHECK(nn::lr_at(s, 0) == 0.0f);
  CHECK(nn::lr_at(s, 1000) == doctest::Approx(5e-4f));
  CHECK(nn::lr_at(s, 2000) == doctest::Approx(1e-3f));
  CHECK(nn::lr_at(s, 101000) == doctest::Approx(5e-4f));  // cosine midpoint
  CHECK(nn::lr_at(s, 200000) == 0.0f);
  CHECK(nn::lr_at(s, 999999) == 0.0f);
  CHECK(nn::lr_at(s, 199999) > 0.0f);

  // Rises through warmup, falls through the cosine phase.
  for (std::int64_t t = 1; t <= 2000; t += 100)
    CHECK(nn::lr_at(s, t) > nn::lr_at(s, t - 1));
  for (std::int64_t t = 3000; t < 200000; t += 10000)
    CHECK(nn::lr_at(s, t) < nn::lr_at(s, t - 1000));

  CHECK_THROWS_AS(nn::lr_at(s, -1), DataError);
  s.warmup_steps = s.total_steps;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("dropout mask statistics and scaling") {
  Rng rng(91);
  const float rate = 0.25f;
  const Eigen::MatrixXf mask = nn::dropout_mask(200, 200, rate, rng);
  int zeros = 0;
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const float v = mask.data()[i];
    REQUIRE((v == 0.0f || v == doctest::Approx(1.0f / 0.75f)));
    zeros += v == 0.0f;
  }
  const double zero_frac = static_cast<double>(zeros) / mask.size();
  CHECK(zero_frac == doctest::Approx(0.25).epsilon(0.08));
  CHECK(mask.mean() == doctest::Approx(1.0f).epsilon(0.02));

  Rng rng2(92);
  CHECK(nn::dropout_mask(4, 4, 0.0f, rng2).isOnes());
  CHECK_THROWS_AS(nn::dropout_mask(4, 4, 1.0f, rng2), ConfigError);
  CHECK_THROWS_AS(nn::dropout_mask(4, 4, -0.1f, rng2), ConfigError);
}

TEST_CASE("dropout_apply zeroes or rescales every entry") {
  Rng rng(95);
  const Eigen::MatrixXf x = random_batch(50, 40, 96).array() + 2.0f;
  const Eigen::MatrixXf y = nn::dropout_apply(x, 0.5f, rng);
  int zeros = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const float got = y.data()[i];
    const float kept = x.data()[i] * 2.0f;
    REQUIRE((got == 0.0f || got == doctest::Approx(kept)));
    zeros += got == 0.0f;
  }
  const double zero_frac = static_cast<double>(zeros) / x.size();
  CHECK(zero_frac == doctest::Approx(0.5).epsilon(0.06));
}
