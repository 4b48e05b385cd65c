#include "support.hpp"
#include "treevae/checkpoint.hpp"

#include <doctest.h>

#include <cmath>

using namespace treevae;
using namespace treevae::diff;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

TEST_CASE("celu_capped values") {
  CHECK(celu_capped_value(0.0) == 0.0);
  CHECK(celu_capped_value(10.0) == 6.0);
  CHECK(celu_capped_value(-3.0) == doctest::Approx(3.0 * (std::exp(-1.0) - 1.0)).epsilon(1e-12));
  CHECK(celu_capped_value(-3.0) == doctest::Approx(-1.896362).epsilon(1e-6));
  CHECK(celu_capped_value(-30.0) > -3.0);
  CHECK(celu_capped_value(-1e6) >= -3.0);
  CHECK(celu_capped_value(4.5) == 4.5);
}

TEST_CASE("gradient is zero past the cap and every op passes finite differences") {
  ParameterStore flat;
  flat.add("x", Matrix::Constant(1, 1, 10.0));
  Graph g(&flat);
  Var l = sum(celu_capped(g.param("x")));
  g.backward(l);
  CHECK(g.gradients().at("x")(0, 0) == 0.0);

  Rng rng(3);
  ParameterStore s;
  s.add("a", random_matrix(3, 4, rng));
  s.add("b", random_matrix(4, 2, rng));
  s.add("c", random_matrix(3, 4, rng));
  s.add("bias", random_matrix(1, 4, rng));
  s.add("pos", (random_matrix(3, 4, rng).array().abs() + 0.5).matrix());
  s.add("unused", random_matrix(2, 2, rng));
  const std::vector<int> targets{1, 0, 1};
  const std::vector<double> weights{0.5, 1.0, 2.0};
  auto loss = [&](Graph& g) {
    Var a = g.param("a"), b = g.param("b"), c = g.param("c");
    Var x = add_bias(add(mul(a, c), scale(sub(c, a), 0.3)), g.param("bias"));
    Var parts[] = {sigmoid(x), celu(x), celu_capped(scale(x, 2.0)), one_minus(square(x))};
    Var stacked = concat_rows(parts);  // 12 x 4
    Var picked = gather_rows(stacked, std::vector<int>{0, 5, 5, 11});
    const std::vector<char> take{1, 0, 1, 0};
    Var sel = select_rows(take, picked, slice_rows(stacked, 2, 4));
    Var logits = matmul(concat_cols(slice_rows(sel, 0, 3), log(g.param("pos"))), concat_rows(std::vector<Var>{b, b}));
    Var ce = softmax_cross_entropy(logits, targets, weights);
    return add(add(ce, mean(row_sum(add_scalar(sel, 1.0)))), scale(sum(square(matmul(a, b))), 0.1));
  };
  const auto r = test::gradient_check(s, loss);
  INFO(r.worst);
  CHECK(r.max_rel <= 1e-6);

  Graph g2(&s);
  g2.backward(loss(g2));
  CHECK(g2.gradients().at("unused").isZero());
  CHECK(g2.reached_gradients().count("unused") == 0);
  CHECK(g2.reached_gradients().count("a") == 1);
}

TEST_CASE("sum(W x) gradient has outer-product structure") {
  Rng rng(5);
  ParameterStore s;
  s.add("W", random_matrix(3, 2, rng));
  const Matrix x = random_matrix(4, 3, rng);
  Graph g(&s);
  g.backward(sum(matmul(g.constant(x), g.param("W"))));
  // d/dW sum(x W) = x^T 1
  const Matrix expected = x.transpose() * Matrix::Ones(4, 2);
  CHECK((g.gradients().at("W") - expected).norm() < 1e-12);
}

TEST_CASE("non-finite values raise") {
  Graph g;
  Var a = g.constant(Matrix::Constant(1, 1, -1.0));
  CHECK_THROWS_AS(log(a), NonFiniteError);
  Var big = g.constant(Matrix::Constant(1, 1, 1e308));
  CHECK_THROWS_AS(scale(big, 10.0), NonFiniteError);
}

TEST_CASE("init specs") {
  Rng rng(1);
  const Matrix w = init(InitSpec::variance_scaled(16), 16, 2000, rng);
  CHECK(w.cwiseAbs().maxCoeff() <= 0.5);
  // The truncated normal at 2 sigma has std 0.25 * 0.8796.
  const double sd = std::sqrt(w.array().square().mean());
  CHECK(sd == doctest::Approx(0.25 * 0.879626).epsilon(0.01));
  CHECK(init(InitSpec::zeros(), 1, 128, rng).isZero());
  CHECK((init(InitSpec::constant(-5), 1, 128, rng).array() == -5.0).all());
  const Matrix u = init(InitSpec::uniform01(), 10, 10, rng);
  CHECK(u.minCoeff() >= 0.0);
  CHECK(u.maxCoeff() < 1.0);
  Rng r1(9), r2(9);
  CHECK(init(InitSpec::variance_scaled(), 8, 8, r1) == init(InitSpec::variance_scaled(), 8, 8, r2));
}

TEST_CASE("learning rate schedule") {
  AdamConfig cfg;
  CHECK(learning_rate(cfg, 0) == doctest::Approx(2.5e-4).epsilon(1e-15));
  CHECK(learning_rate(cfg, 1000) == doctest::Approx(2.475e-4).epsilon(1e-12));
  CHECK(learning_rate(cfg, 500) == doctest::Approx(2.5e-4 * std::sqrt(0.99)).epsilon(1e-12));
}

TEST_CASE("adam matches a scalar oracle") {
  // Scalar Adam written out by hand.
  struct Oracle {
    double p, m = 0, v = 0;
    int t = 0;
    void step(double g) {
      ++t;
      const double lr = 2.5e-4 * std::pow(0.99, (t - 1) / 1000.0);
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
      p -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  };
  ParameterStore s;
  s.add("p", Matrix::Constant(1, 1, 1.0));
  Oracle o{1.0};
  for (int i = 0; i < 2500; ++i) {
    // loss = p^2 / 2
    Graph g(&s);
    g.backward(scale(sum(square(g.param("p"))), 0.5));
    const double grad = g.gradients().at("p")(0, 0);
    CHECK(grad == doctest::Approx(o.p).epsilon(1e-12));
    adam_step(s, g.gradients(), AdamConfig{});
    o.step(grad);
    if (i == 0) CHECK(s.value("p")(0, 0) < 1.0);
  }
  CHECK(s.value("p")(0, 0) == doctest::Approx(o.p).epsilon(1e-12));
  CHECK(s.step() == 2500);

  Gradients bad{{"p", Matrix::Zero(2, 1)}};
  CHECK_THROWS_AS(adam_step(s, bad, AdamConfig{}), std::invalid_argument);
  Gradients unknown{{"q", Matrix::Zero(1, 1)}};
  CHECK_THROWS(adam_step(s, unknown, AdamConfig{}));
}

TEST_CASE("global norm clipping") {
  Gradients g{{"a", Matrix::Constant(1, 1, 0.6)}, {"b", Matrix::Constant(1, 1, 0.8)}};
  CHECK(clip_global_norm(g, 0.01) == doctest::Approx(1.0));
  CHECK(g["a"](0, 0) == doctest::Approx(0.006));
  CHECK(g["b"](0, 0) == doctest::Approx(0.008));
  CHECK(global_norm(g) == doctest::Approx(0.01));

  Gradients small{{"a", Matrix::Constant(1, 1, 0.005)}};
  clip_global_norm(small, 0.01);
  CHECK(small["a"](0, 0) == 0.005);
  Gradients zero{{"a", Matrix::Zero(2, 2)}};
  clip_global_norm(zero, 0.01);
  CHECK(zero["a"].isZero());
  CHECK_THROWS_AS(clip_global_norm(zero, 0.0), std::invalid_argument);
}

TEST_CASE("property: clipping is idempotent") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Gradients g{{"a", random_matrix(3, 3, rng, std::exp(uniform01(rng) * 10 - 7))},
                {"b", random_matrix(1, 5, rng, 0.01)}};
    clip_global_norm(g, 0.01);
    Gradients again = g;
    clip_global_norm(again, 0.01);
    for (const auto& [k, v] : g) CHECK((again[k] - v).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("checkpoint store round trip") {
  Rng rng(4);
  ParameterStore s;
  s.add("x/W", random_matrix(3, 2, rng));
  s.add("x/b", random_matrix(1, 2, rng));
  Graph g(&s);
  g.backward(sum(square(g.param("x/W"))));
  adam_step(s, g.gradients(), AdamConfig{});
  const ParameterStore back = store_from_json(nlohmann::json::parse(store_to_json(s).dump()));
  CHECK(back.step() == 1);
  for (const auto& [name, p] : s.entries()) {
    CHECK(back.value(name) == p.value);
    CHECK(back.entry(name).first_moment == p.first_moment);
    CHECK(back.entry(name).second_moment == p.second_moment);
  }
  CHECK_THROWS(s.add("x/W", Matrix::Zero(1, 1)));
}
