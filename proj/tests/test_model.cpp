#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "npn/model.hpp"
#include "oracle.hpp"

using namespace npn;

namespace {

// Scalar loss of the network's logits; used as the FD target for
// parameter-gradient checks.
double net_ce(const MlpNetwork& net, const Batch& x,
              const std::vector<std::size_t>& labels) {
  return ce_loss(softmax_batch(forward(net, x)), labels).value;
}

}  // namespace

TEST_CASE("zero network produces zero logits and uniform softmax") {
  auto net = MlpNetwork::init({3, 4, 2}, 1);
  for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
  auto logits = forward(net, {{0.4, -1.2, 2.0}});
  for (double v : logits[0]) CHECK(v == 0.0);
  auto p = softmax(logits[0]);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
}

TEST_CASE("single linear layer reproduces the weight column response") {
  MlpNetwork net;
  net.layer_dims = {3, 2};
  net.weights = {{1.0, 2.0, 3.0, 4.0, 5.0, 6.0}};  // 2x3 row-major
  net.biases = {{0.5, -0.5}};
  auto logits = forward(net, {{0.0, 1.0, 0.0}});
  CHECK(logits[0][0] == doctest::Approx(2.5));
  CHECK(logits[0][1] == doctest::Approx(4.5));
}

TEST_CASE("seeded init is reproducible and width mismatches are rejected") {
  auto a = MlpNetwork::init({5, 8, 3}, 99);
  auto b = MlpNetwork::init({5, 8, 3}, 99);
  CHECK(a.weights == b.weights);
  auto c = MlpNetwork::init({5, 8, 3}, 100);
  CHECK(a.weights != c.weights);
  Batch narrow = {{1.0, 2.0}};
  CHECK_THROWS_AS(forward(a, narrow), std::invalid_argument);
}

TEST_CASE("zero logit gradient gives zero parameter gradients") {
  auto net = MlpNetwork::init({4, 6, 3}, 2);
  ForwardCache cache;
  forward(net, {{0.1, 0.2, 0.3, 0.4}}, &cache);
  auto g = backward(net, cache, {{0.0, 0.0, 0.0}});
  for (const auto& w : g.weights)
    for (double v : w) CHECK(v == 0.0);
  for (const auto& b : g.biases)
    for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("one-layer CE gradient matches the logistic closed form") {
  auto net = MlpNetwork::init({3, 2}, 4);
  Batch x = {{0.3, -0.7, 1.1}};
  std::vector<std::size_t> y = {1};
  ForwardCache cache;
  auto probs = softmax_batch(forward(net, x, &cache));
  auto loss = ce_loss(probs, y);
  auto g = backward(net, cache, loss.grad_logits);
  for (std::size_t j = 0; j < 2; ++j) {
    const double delta = probs[0][j] - (j == 1 ? 1.0 : 0.0);
    CHECK(g.biases[0][j] == doctest::Approx(delta).epsilon(1e-10));
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(g.weights[0][j * 3 + k] ==
            doctest::Approx(delta * x[0][k]).epsilon(1e-10));
  }
}

TEST_CASE("parameter gradients match central finite differences") {
  std::mt19937_64 rng(31);
  for (auto dims : {std::vector<std::size_t>{4, 5, 3},
                    std::vector<std::size_t>{6, 8, 8, 2},
                    std::vector<std::size_t>{3, 10, 5}}) {
    auto net = MlpNetwork::init(dims, rng());
    const std::size_t batch = 3;
    Batch x = oracle::random_logits(rng, batch, dims.front(), 1.0);
    std::vector<std::size_t> labels(batch);
    for (auto& y : labels) y = rng() % dims.back();

    ForwardCache cache;
    auto probs = softmax_batch(forward(net, x, &cache));
    auto analytic = backward(net, cache, ce_loss(probs, labels).grad_logits);

    const double h = 1e-5;
    for (int probe = 0; probe < 20; ++probe) {
      const std::size_t l = rng() % net.num_layers();
      const std::size_t i = rng() % net.weights[l].size();
      const double orig = net.weights[l][i];
      net.weights[l][i] = orig + h;
      const double up = net_ce(net, x, labels);
      net.weights[l][i] = orig - h;
      const double down = net_ce(net, x, labels);
      net.weights[l][i] = orig;
      const double fd = (up - down) / (2 * h);
      const double denom =
          std::max({std::abs(fd), std::abs(analytic.weights[l][i]), 1e-8});
      CHECK(std::abs(fd - analytic.weights[l][i]) / denom < 1e-5);
    }
  }
}

TEST_CASE("sgd with zero momentum is plain gradient descent") {
  auto net = MlpNetwork::init({2, 2}, 1);
  auto before = net.weights[0];
  auto opt = OptimizerState::init(net, 0.0, 0.1);
  Gradients g;
  g.weights = {{1.0, 2.0, 3.0, 4.0}};
  g.biases = {{0.0, 0.0}};
  sgd_step(net, g, opt, 0.1);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(net.weights[0][i] ==
          doctest::Approx(before[i] - 0.1 * g.weights[0][i]).epsilon(1e-12));
}

TEST_CASE("two momentum steps with constant gradient displace by 1 + 1.9") {
  auto net = MlpNetwork::init({2, 2}, 1);
  auto before = net.weights[0];
  auto opt = OptimizerState::init(net, 0.9, 1.0);
  Gradients g;
  g.weights = {{0.5, -0.25, 1.0, 2.0}};
  g.biases = {{0.0, 0.0}};
  sgd_step(net, g, opt, 1.0);
  sgd_step(net, g, opt, 1.0);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(net.weights[0][i] ==
          doctest::Approx(before[i] - g.weights[0][i] * (1.0 + 1.9))
              .epsilon(1e-12));
}

TEST_CASE("zero lr keeps parameters but updates buffers") {
  auto net = MlpNetwork::init({2, 2}, 1);
  auto before = net.weights[0];
  auto opt = OptimizerState::init(net, 0.9, 1.0);
  Gradients g;
  g.weights = {{1.0, 1.0, 1.0, 1.0}};
  g.biases = {{1.0, 1.0}};
  sgd_step(net, g, opt, 0.0);
  CHECK(net.weights[0] == before);
  CHECK(opt.weight_momentum[0][0] == doctest::Approx(1.0));
}

TEST_CASE("learning rate schedule") {
  LrSchedule s{10, 30, 0.005, 0.05};
  for (std::size_t e = 0; e < 10; ++e) CHECK(lr_at(s, e) == 0.005);
  CHECK(lr_at(s, 10) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(lr_at(s, 20) == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(lr_at(s, 29) ==
        doctest::Approx(0.05 * 0.5 *
                        (1 + std::cos(std::numbers::pi * 19.0 / 20.0)))
            .epsilon(1e-12));
  CHECK_THROWS_AS(lr_at(s, 30), std::out_of_range);
}

TEST_CASE("CE training separates linearly separable data") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.3);
  Batch x;
  std::vector<std::size_t> y;
  for (int n = 0; n < 60; ++n) {
    const std::size_t cls = n % 2;
    const double cx = cls == 0 ? -2.0 : 2.0;
    x.push_back({cx + noise(rng), -cx + noise(rng)});
    y.push_back(cls);
  }
  auto net = MlpNetwork::init({2, 8, 2}, 3);
  auto opt = OptimizerState::init(net, 0.9, 0.1);
  for (int epoch = 0; epoch < 200; ++epoch) {
    ForwardCache cache;
    auto probs = softmax_batch(forward(net, x, &cache));
    auto loss = ce_loss(probs, y);
    auto g = backward(net, cache, loss.grad_logits);
    sgd_step(net, g, opt, 0.1);
  }
  auto logits = forward(net, x);
  std::size_t correct = 0;
  for (std::size_t n = 0; n < x.size(); ++n)
    if (argmax_index(logits[n]) == y[n]) ++correct;
  CHECK(correct == x.size());
}
