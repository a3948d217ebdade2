#include <cmath>

#include "doctest.h"
#include "gipa/nn.hpp"
#include "test_support.hpp"

using namespace gipa;
using testing::grads_agree;
using testing::numeric_grad;
using testing::random_matrix;
using testing::weighted_sum;

TEST_CASE("linear examples") {
  Parameter eye(DenseMatrix{{1, 0}, {0, 1}});
  CHECK(linear(DenseMatrix{{1, 2}}, eye) == DenseMatrix{{1, 2}});

  DenseMatrix x{{1, 1}};
  Parameter w(DenseMatrix{{2}, {3}});
  CHECK(linear(x, w) == DenseMatrix{{5}});
  auto gx = linear_backward(x, w, nullptr, DenseMatrix{{1}});
  CHECK(gx == DenseMatrix{{2, 3}});
  CHECK(w.grad == DenseMatrix{{1}, {1}});

  Parameter b(DenseMatrix{{10}});
  CHECK(linear(DenseMatrix{{1, 1}, {0, 0}}, w, &b) == DenseMatrix{{15}, {10}});

  CHECK_THROWS_AS(linear(DenseMatrix{{1, 2, 3}}, w), ShapeError);
}

TEST_CASE("linear gradient matches finite differences") {
  Rng rng(1);
  DenseMatrix x = random_matrix(4, 3, rng);
  Parameter w(random_matrix(3, 5, rng));
  Parameter b(random_matrix(1, 5, rng));
  DenseMatrix r = random_matrix(4, 5, rng);
  auto f = [&] { return weighted_sum(linear(x, w, &b), r); };
  auto gx = linear_backward(x, w, &b, r);
  CHECK(grads_agree(gx, numeric_grad(x, f)));
  CHECK(grads_agree(w.grad, numeric_grad(w.value, f)));
  CHECK(grads_agree(b.grad, numeric_grad(b.value, f)));
}

TEST_CASE("relu") {
  DenseMatrix x{{-1, 0, 2}};
  CHECK(relu(x) == DenseMatrix{{0, 0, 2}});
  CHECK(relu_backward(x, DenseMatrix{{1, 1, 1}}) == DenseMatrix{{0, 0, 1}});
  DenseMatrix pos{{0.5, 3}};
  CHECK(relu(pos) == pos);

  Rng rng(2);
  DenseMatrix y = random_matrix(3, 4, rng);
  DenseMatrix r = random_matrix(3, 4, rng);
  auto f = [&] { return weighted_sum(relu(y), r); };
  CHECK(grads_agree(relu_backward(y, r), numeric_grad(y, f)));
}

TEST_CASE("dropout") {
  Rng rng(3);
  DenseMatrix x = random_matrix(5, 5, rng);
  DropoutMask mask;
  CHECK(dropout(x, 0.0, rng, Phase::train, mask) == x);
  CHECK(mask.identity());
  CHECK(dropout(x, 0.7, rng, Phase::eval, mask) == x);
  CHECK(mask.identity());
  CHECK_THROWS_AS(dropout(x, 1.0, rng, Phase::train, mask), std::invalid_argument);
  CHECK_THROWS_AS(dropout(x, -0.1, rng, Phase::train, mask), std::invalid_argument);

  SUBCASE("survivor fraction") {
    DenseMatrix ones(1000, 1000, 1.0);
    Rng r(42);
    auto out = dropout(ones, 0.5, r, Phase::train, mask);
    std::size_t survivors = 0;
    for (double v : out.data()) {
      CHECK_FALSE((v != 0.0 && v != 2.0));
      survivors += v != 0.0;
    }
    CHECK(std::abs(survivors / 1e6 - 0.5) < 0.002);
  }

  SUBCASE("backward replays the forward mask") {
    Rng r(5);
    auto out = dropout(x, 0.3, r, Phase::train, mask);
    auto back = dropout_backward(mask, DenseMatrix(5, 5, 1.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(back.data()[i] == mask.scale[i]);
      CHECK(out.data()[i] == x.data()[i] * mask.scale[i]);
      CHECK((mask.scale[i] == 0.0 || mask.scale[i] == doctest::Approx(1.0 / 0.7)));
    }
    // Fixed mask is linear, so finite differences are exact up to rounding.
    DenseMatrix rw = random_matrix(5, 5, r);
    auto f = [&] {
      DenseMatrix y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] *= mask.scale[i];
      return weighted_sum(y, rw);
    };
    CHECK(grads_agree(dropout_backward(mask, rw), numeric_grad(x, f)));
  }
}

TEST_CASE("concat and split") {
  DenseMatrix one{{1}}, two{{2}};
  CHECK(concat_cols({&one, &two}) == DenseMatrix{{1, 2}});
  DenseMatrix a{{1, 2}, {3, 4}};
  CHECK(concat_cols({&a}) == a);
  auto parts = split_cols(DenseMatrix{{7, 8}}, {1, 1});
  CHECK(parts[0] == DenseMatrix{{7}});
  CHECK(parts[1] == DenseMatrix{{8}});
  DenseMatrix b{{1}};
  CHECK_THROWS_AS(concat_cols({&a, &b}), ShapeError);
  CHECK_THROWS_AS(split_cols(a, {1}), ShapeError);

  Rng rng(4);
  DenseMatrix p = random_matrix(3, 2, rng), q = random_matrix(3, 4, rng);
  DenseMatrix r = random_matrix(3, 6, rng);
  auto grads = split_cols(r, {2, 4});
  auto f = [&] { return weighted_sum(concat_cols({&p, &q}), r); };
  CHECK(grads_agree(grads[0], numeric_grad(p, f)));
  CHECK(grads_agree(grads[1], numeric_grad(q, f)));
}

TEST_CASE("mlp structure") {
  Rng rng(6);
  MlpCache cache;
  SUBCASE("one layer is linear") {
    Mlp m({{3, 2}, true, 0.0}, "m");
    m.init_glorot(rng);
    m.biases()[0].value = random_matrix(1, 2, rng);
    DenseMatrix x = random_matrix(4, 3, rng);
    CHECK(m.forward(x, Phase::train, rng, cache) == linear(x, m.weights()[0], &m.biases()[0]));
  }
  SUBCASE("identity weights on non-negative input") {
    Mlp m({{3, 3, 3}, false, 0.0}, "m");
    for (auto& w : m.weights()) {
      w.value = DenseMatrix(3, 3);
      for (std::size_t i = 0; i < 3; ++i) w.value(i, i) = 1.0;
    }
    DenseMatrix x = random_matrix(4, 3, rng, 0.0, 1.0);
    CHECK(m.forward(x, Phase::eval, rng, cache) == x);
  }
  SUBCASE("bias-free mlp owns only weights") {
    Mlp m({{5, 4, 2}, false, 0.1}, "att");
    std::vector<Parameter*> ps;
    m.collect(ps);
    CHECK(ps.size() == 2);
    CHECK(ps[0]->name == "att.w0");
  }
  CHECK_THROWS_AS(Mlp({{3}, true, 0.0}, "bad"), std::invalid_argument);
  Mlp m({{3, 2}, true, 0.0}, "m");
  CHECK_THROWS_AS(m.forward(DenseMatrix(1, 4), Phase::eval, rng, cache), ShapeError);
}

TEST_CASE("mlp gradients match finite differences") {
  Rng rng(8);
  for (double rate : {0.0, 0.3}) {
    Mlp m({{4, 6, 5, 3}, true, rate}, "m");
    m.init_glorot(rng);
    for (auto& b : m.biases()) b.value = random_matrix(1, b.value.cols(), rng);
    DenseMatrix x = random_matrix(5, 4, rng);
    DenseMatrix r = random_matrix(5, 3, rng);
    const std::uint64_t seed = rng();
    auto f = [&] {
      Rng local(seed);
      MlpCache c;
      return weighted_sum(m.forward(x, Phase::train, local, c), r);
    };
    Rng local(seed);
    MlpCache cache;
    m.forward(x, Phase::train, local, cache);
    auto gx = m.backward(cache, r);
    CHECK(grads_agree(gx, numeric_grad(x, f), 1e-6));
    for (auto& w : m.weights()) CHECK(grads_agree(w.grad, numeric_grad(w.value, f), 1e-6));
    for (auto& b : m.biases()) CHECK(grads_agree(b.grad, numeric_grad(b.value, f), 1e-6));
  }
}

TEST_CASE("adamw examples") {
  SUBCASE("zero gradient and no decay leaves value unchanged") {
    Parameter p(DenseMatrix{{0.3, -2.0}});
    adamw_step(p, {0.01, 0.9, 0.999, 1e-8, 0.0});
    CHECK(p.value == DenseMatrix{{0.3, -2.0}});
    CHECK(p.step_count == 1);
  }
  SUBCASE("first step with unit gradient") {
    Parameter p(DenseMatrix{{0.0}});
    p.grad(0, 0) = 1.0;
    adamw_step(p, {0.01, 0.9, 0.999, 1e-8, 0.0});
    // m_hat = v_hat = 1, so the step is -lr / (1 + eps).
    CHECK(p.value(0, 0) == doctest::Approx(-0.01 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(p.value(0, 0) == doctest::Approx(-0.01).epsilon(1e-7));
    CHECK(p.grad(0, 0) == 0.0);
  }
  SUBCASE("decoupled decay") {
    Parameter p(DenseMatrix{{1.0}});
    adamw_step(p, {0.01, 0.9, 0.999, 1e-8, 0.1});
    // value -= lr * wd * value = 1 - 0.01 * 0.1
    CHECK(p.value(0, 0) == doctest::Approx(0.999).epsilon(1e-15));
  }
  SUBCASE("non-finite gradient is rejected") {
    Parameter p(DenseMatrix{{1.0}});
    p.grad(0, 0) = std::nan("");
    CHECK_THROWS_AS(adamw_step(p, {}), NumericError);
    CHECK(p.value(0, 0) == 1.0);
  }
}

TEST_CASE("adamw without decay equals textbook Adam") {
  Rng rng(9);
  Parameter p(random_matrix(3, 3, rng));
  DenseMatrix theta = p.value, m(3, 3), v(3, 3);
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 20; ++t) {
    DenseMatrix g = random_matrix(3, 3, rng);
    p.grad = g;
    adamw_step(p, {lr, b1, b2, eps, 0.0});
    for (std::size_t i = 0; i < 9; ++i) {
      double& mi = m.data()[i];
      double& vi = v.data()[i];
      const double gi = g.data()[i];
      mi = b1 * mi + (1 - b1) * gi;
      vi = b2 * vi + (1 - b2) * gi * gi;
      theta.data()[i] -= lr * (mi / (1 - std::pow(b1, t))) / (std::sqrt(vi / (1 - std::pow(b2, t))) + eps);
    }
  }
  CHECK(max_abs_diff(theta, p.value) < 1e-14);
}

TEST_CASE("glorot init stays within its bound") {
  Rng rng(10);
  auto w = glorot_uniform(30, 50, rng);
  const double limit = std::sqrt(6.0 / 80.0);
  for (double v : w.data()) CHECK(std::abs(v) <= limit);
}
