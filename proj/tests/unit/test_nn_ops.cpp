// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "wavecnn/autograd.hpp"
#include "wavecnn/nn_ops.hpp"

using namespace wavecnn;
using wavecnn::testing::random_tensor;

TEST_CASE("conv1d hand example with same padding") {
  TensorD x(Shape{1, 4, 1}, {1, 2, 3, 4});
  TensorD k(Shape{3, 1, 1}, {1, 1, 1});
  CHECK(conv1d_forward(x, k, nullptr, 1).values() == std::vector<double>{3, 6, 9, 7});
}

TEST_CASE("conv1d first-layer output shape") {
  TensorF x(Shape{1, 32000, 1}, 0.5f);
  TensorF k(Shape{80, 1, 256});
  TensorF y = conv1d_forward(x, k, nullptr, 4);
  CHECK(y.shape() == Shape{1, 8000, 256});
  for (float v : y.data()) CHECK(v == 0.0f);
}

TEST_CASE("conv geometry puts the odd pad at the end") {
  ConvGeometry g = conv_geometry(32000, 80, 4);
  CHECK(g.out_time == 8000);
  CHECK(g.pad_left == 38);
  CHECK(g.pad_right == 38);
  g = conv_geometry(10, 4, 1);
  CHECK(g.pad_left == 1);
  CHECK(g.pad_right == 2);
  for (std::size_t t = 1; t < 40; ++t) {
    for (std::size_t s = 1; s <= 4; ++s) CHECK(conv_geometry(t, 3, s).out_time == (t + s - 1) / s);
  }
}

TEST_CASE("conv1d channel mismatch") {
  TensorF x(Shape{1, 10, 2});
  TensorF k(Shape{3, 1, 4});
  CHECK_THROWS_AS(conv1d_forward(x, k, nullptr, 1), ShapeError);
}

TEST_CASE("conv1d backward special cases") {
  RandomSource rng(5);
  TensorD x = random_tensor<double>(Shape{2, 7, 3}, rng);
  TensorD k = random_tensor<double>(Shape{1, 3, 2}, rng);

  ConvGrads<double> zero = conv1d_backward(TensorD(Shape{2, 7, 2}), x, k, true, 1);
  for (double v : zero.grad_x.data()) CHECK(v == 0.0);
  for (double v : zero.grad_kernel.data()) CHECK(v == 0.0);
  for (double v : zero.grad_bias.data()) CHECK(v == 0.0);

  // rf = 1: grad_kernel[0,c,o] = sum_{b,t} x[b,t,c] g[b,t,o]
  TensorD g = random_tensor<double>(Shape{2, 7, 2}, rng);
  ConvGrads<double> r = conv1d_backward(g, x, k, false, 1);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t o = 0; o < 2; ++o) {
      double expected = 0;
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t t = 0; t < 7; ++t) expected += x.at(b, t, c) * g.at(b, t, o);
      }
      CHECK(r.grad_kernel[c * 2 + o] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  CHECK(r.grad_bias.empty());
}

TEST_CASE("conv1d backward matches finite differences on the stated case") {
  RandomSource rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    CHECK(testing::conv1d_trial(rng, 2, 11, 3, 3, 2, 4, trial % 2 == 0) < 1e-6);
  }
}

TEST_CASE("conv1d matches the naive reference") {
  RandomSource rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t rf = 1 + rng.index(9), stride = 1 + rng.index(4);
    const Shape s{1 + rng.index(4), 1 + rng.index(200), 1 + rng.index(8)};
    const std::size_t out = 1 + rng.index(8);
    TensorD x = random_tensor<double>(s, rng);
    TensorD k = random_tensor<double>(Shape{rf, s[2], out}, rng);
    TensorD b = random_tensor<double>(Shape{out}, rng);
    CHECK(conv1d_forward(x, k, &b, stride) == testing::naive_conv1d(x, k, &b, stride));
    CHECK(conv1d_forward(x, k, nullptr, stride) == testing::naive_conv1d(x, k, nullptr, stride));
  }
}

TEST_CASE("maxpool shapes and hand example") {
  CHECK(maxpool1d_forward(TensorF(Shape{1, 8000, 2})).out.shape() == Shape{1, 2000, 2});
  CHECK(maxpool1d_forward(TensorF(Shape{1, 125, 2})).out.shape() == Shape{1, 32, 2});

  TensorD x(Shape{1, 6, 1}, {1, 3, 2, 0, 5, 4});
  MaxPoolResult<double> r = maxpool1d_forward(x);
  CHECK(r.out.values() == std::vector<double>{3, 5});
  CHECK(r.argmax == std::vector<std::uint32_t>{1, 4});
}

TEST_CASE("maxpool backward routes to the first maximum") {
  TensorD x(Shape{1, 4, 1}, {2, 7, 7, 1});
  MaxPoolResult<double> r = maxpool1d_forward(x);
  TensorD g = maxpool1d_backward(TensorD(Shape{1, 1, 1}, {1.0}), r.argmax, x.shape());
  CHECK(g.values() == std::vector<double>{0, 1, 0, 0});
}

TEST_CASE("batchnorm train mode normalizes per channel") {
  RandomSource rng(9);
  TensorD x = random_tensor<double>(Shape{4, 16, 3}, rng, -3.0, 5.0);
  auto s = BatchNormState<double>::fresh(3);
  BatchNormForward<double> f = batchnorm_forward(x, s, Mode::train);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < 64; ++i) mean += f.y[i * 3 + c];
    mean /= 64;
    for (std::size_t i = 0; i < 64; ++i) var += (f.y[i * 3 + c] - mean) * (f.y[i * 3 + c] - mean);
    var /= 64;
    CHECK(std::abs(mean) < 1e-4);
    CHECK(std::abs(var - 1.0) < 1e-3);
  }
  CHECK(s.stats.initialized());
  for (double v : s.stats.running_var.data()) CHECK(v >= 0.0);
}

TEST_CASE("batchnorm constant input yields beta") {
  TensorD x(Shape{2, 5, 2}, 3.5);
  auto s = BatchNormState<double>::fresh(2);
  s.beta = TensorD(Shape{2}, {0.25, -1.0});
  BatchNormForward<double> f = batchnorm_forward(x, s, Mode::train);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(f.y[i * 2] == 0.25);
    CHECK(f.y[i * 2 + 1] == -1.0);
  }
}

TEST_CASE("batchnorm running statistics and inference") {
  auto s = BatchNormState<double>::fresh(1);
  TensorD x(Shape{2, 2, 1}, {1, 2, 3, 4});
  CHECK_THROWS_AS(batchnorm_forward(x, s, Mode::infer), Error);

  batchnorm_forward(x, s, Mode::train);
  // mean 2.5, biased variance 1.25, momentum 0.1 from (0, 1)
  CHECK(s.stats.running_mean[0] == doctest::Approx(0.25));
  CHECK(s.stats.running_var[0] == doctest::Approx(0.9 + 0.125));

  const BatchNormStats<double> before = s.stats;
  BatchNormForward<double> f = batchnorm_forward(x, s, Mode::infer);
  CHECK(s.stats.running_mean == before.running_mean);
  CHECK(s.stats.running_var == before.running_var);
  const double inv = 1.0 / std::sqrt(1.025 + 1e-5);
  CHECK(f.y[0] == doctest::Approx((1 - 0.25) * inv));

  auto t = BatchNormState<double>::fresh(1);
  t.stats = BatchNormStats<double>::identity(1);
  CHECK(batchnorm_forward(x, t, Mode::infer).y[3] == doctest::Approx(4.0 / std::sqrt(1.0 + 1e-5)));
}

TEST_CASE("batchnorm gradients on the stated shape") {
  RandomSource rng(31);
  for (int trial = 0; trial < 5; ++trial) CHECK(testing::batchnorm_trial(rng, Mode::train) < 1e-5);
}

TEST_CASE("global average pooling") {
  CHECK(global_avg_pool_forward(TensorF(Shape{1, 32, 512})).shape() == Shape{1, 1, 512});
  TensorD c(Shape{2, 9, 3}, 1.75);
  const TensorD pooled = global_avg_pool_forward(c);
  for (double v : pooled.data()) CHECK(v == 1.75);
  RandomSource rng(1);
  TensorD one = random_tensor<double>(Shape{2, 1, 4}, rng);
  CHECK(global_avg_pool_forward(one) == one);
}

TEST_CASE("softmax cross-entropy") {
  TensorD logits(Shape{1, 10}, 0.0);
  std::vector<int> label{3};
  SoftmaxXent<double> r = softmax_xent_forward(logits, label);
  for (double p : r.probabilities.data()) CHECK(p == doctest::Approx(0.1));
  CHECK(r.loss == doctest::Approx(std::log(10.0)));

  TensorF big(Shape{1, 4}, 0.0f);
  big[2] = 1000.0f;
  std::vector<int> two{2};
  SoftmaxXent<float> s = softmax_xent_forward(big, two);
  CHECK(s.loss >= 0.0);
  CHECK(s.loss < 1e-6);

  std::vector<int> bad{10};
  CHECK_THROWS_AS(softmax_xent_forward(logits, bad), ConfigError);
}

TEST_CASE("softmax rows sum to one and loss is non-negative") {
  RandomSource rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t batch = 1 + rng.index(5), classes = 2 + rng.index(9);
    TensorD z = random_tensor<double>(Shape{batch, classes}, rng, -20, 20);
    std::vector<int> labels(batch);
    for (int& l : labels) l = static_cast<int>(rng.index(classes));
    SoftmaxXent<double> r = softmax_xent_forward(z, labels);
    CHECK(r.loss >= 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      double s = 0;
      for (std::size_t k = 0; k < classes; ++k) s += r.probabilities[b * classes + k];
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("dense softmax gradients on the stated shape") {
  RandomSource rng(8);
  for (int trial = 0; trial < 5; ++trial) CHECK(testing::dense_softmax_xent_trial(rng, 3, 5, 4) < 1e-5);
}

TEST_CASE("residual block with zeroed branch passes the shortcut") {
  RandomSource rng(12);
  auto make_block = [](std::size_t in, std::size_t out) {
    ResidualBlockParams<double> p;
    p.conv1 = {TensorD(Shape{3, in, out}), TensorD(), 1};
    p.conv2 = {TensorD(Shape{3, out, out}), TensorD(), 1};
    p.bn1 = BatchNormState<double>::fresh(out);
    p.bn2 = BatchNormState<double>::fresh(out);
    return p;
  };

  TensorD x = random_tensor<double>(Shape{2, 20, 4}, rng);
  auto same = make_block(4, 4);
  CHECK(residual_block_forward(x, same, Mode::train) == max_with_zero(x));

  TensorD wide_x = random_tensor<double>(Shape{2, 20, 48}, rng);
  auto wide = make_block(48, 96);
  TensorD y = residual_block_forward(wide_x, wide, Mode::train);
  CHECK(y.shape() == Shape{2, 20, 96});
  CHECK(y == max_with_zero(pad_channels_forward(wide_x, 96)));

  auto shrinking = make_block(8, 4);
  CHECK_THROWS_AS(residual_block_forward(random_tensor<double>(Shape{2, 5, 8}, rng), shrinking, Mode::train),
                  ShapeError);
}

TEST_CASE("dropout") {
  RandomSource rng(99);
  TensorF x = random_tensor<float>(Shape{1, 1000, 1}, rng);
  CHECK(dropout_forward(x, 0.0, Mode::train, rng).y == x);
  CHECK(dropout_forward(x, 0.3, Mode::infer, rng).y == x);
  CHECK_THROWS_AS(dropout_forward(x, 1.0, Mode::train, rng), ConfigError);

  TensorD ones(Shape{1, 200000, 1}, 1.0);
  DropoutForward<double> r = dropout_forward(ones, 0.3, Mode::train, rng);
  std::size_t kept = 0;
  double total = 0;
  for (std::size_t i = 0; i < r.y.size(); ++i) {
    if (r.y[i] != 0.0) {
      ++kept;
      CHECK(r.y[i] == doctest::Approx(1.0 / 0.7));
    }
    total += r.y[i];
  }
  const double kept_fraction = static_cast<double>(kept) / 200000.0;
  CHECK(std::abs(kept_fraction - 0.7) < 0.02);
  CHECK(std::abs(total / 200000.0 - 1.0) < 0.02);
}

TEST_CASE("tape accumulates gradients at fan-out") {
  Tape<double> tape;
  TensorD a(Shape{3}, {1, -2, 3});
  const Var x = tape.input(a.reshaped(Shape{1, 3, 1}));
  const Var y = ag::add(tape, x, ag::relu(tape, x));  // y = x + relu(x)
  tape.backward(y, TensorD(Shape{1, 3, 1}, 1.0));
  CHECK(tape.grad(x).values() == std::vector<double>{2, 1, 2});
}

TEST_CASE("every op passes randomized finite-difference trials") {
  RandomSource rng(1234);
  for (const auto& op : testing::gradient_ops()) {
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) worst = std::max(worst, op.trial(rng));
    INFO(op.name << " worst relative error " << worst);
    CHECK(worst < 1e-4);
  }
}
