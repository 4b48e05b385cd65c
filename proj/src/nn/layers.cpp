#include "treevae/nn/layers.hpp"

namespace treevae::nn {

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::linear: return x;
    case Activation::sigmoid: return diff::sigmoid(x);
    case Activation::celu: return diff::celu(x, 3.0);
    case Activation::celu_capped: return diff::celu_capped(x, 3.0, 6.0);
  }
  return x;
}

Dense Dense::create(ParameterStore& store, std::string prefix, int in, int out, Activation act, Rng& rng,
                    diff::InitSpec weights, diff::InitSpec bias) {
  Dense d{std::move(prefix), in, out, act};
  store.add(d.prefix + "/W", diff::init(weights, in, out, rng));
  store.add(d.prefix + "/b", diff::init(bias, 1, out, rng));
  return d;
}

Var Dense::forward(Graph& g, Var x) const {
  if (x.cols() != in) {
    throw std::invalid_argument(prefix + ": expected " + std::to_string(in) + " inputs, got " +
                                std::to_string(x.cols()));
  }
  return activate(diff::add_bias(diff::matmul(x, g.param(prefix + "/W")), g.param(prefix + "/b")), activation);
}

GruCell GruCell::create(ParameterStore& store, std::string prefix, int input_dim, int state_dim, Rng& rng) {
  GruCell c{std::move(prefix), input_dim, state_dim};
  // {W, U} of a gate are initialized as one concatenated kernel.
  const auto scaled = diff::InitSpec::variance_scaled(input_dim + state_dim);
  store.add(c.prefix + "/W_z", Matrix::Zero(input_dim, state_dim));
  store.add(c.prefix + "/U_z", Matrix::Zero(state_dim, state_dim));
  store.add(c.prefix + "/b_z", Matrix::Ones(1, state_dim));
  store.add(c.prefix + "/W_r", diff::init(scaled, input_dim, state_dim, rng));
  store.add(c.prefix + "/U_r", diff::init(scaled, state_dim, state_dim, rng));
  store.add(c.prefix + "/b_r", Matrix::Zero(1, state_dim));
  store.add(c.prefix + "/W_h", diff::init(scaled, input_dim, state_dim, rng));
  store.add(c.prefix + "/U_h", diff::init(scaled, state_dim, state_dim, rng));
  store.add(c.prefix + "/b_h", Matrix::Zero(1, state_dim));
  return c;
}

Var GruCell::update_gate(Graph& g, Var x, Var h) const {
  using namespace diff;
  return sigmoid(add_bias(add(matmul(x, g.param(prefix + "/W_z")), matmul(h, g.param(prefix + "/U_z"))),
                          g.param(prefix + "/b_z")));
}

Var GruCell::step(Graph& g, Var x, Var h) const {
  using namespace diff;
  if (x.cols() != input_dim || h.cols() != state_dim || x.rows() != h.rows()) {
    throw std::invalid_argument(prefix + ": gru_step dimension mismatch");
  }
  Var z = update_gate(g, x, h);
  Var r = sigmoid(add_bias(add(matmul(x, g.param(prefix + "/W_r")), matmul(h, g.param(prefix + "/U_r"))),
                           g.param(prefix + "/b_r")));
  Var c = celu_capped(add_bias(add(matmul(x, g.param(prefix + "/W_h")), matmul(mul(r, h), g.param(prefix + "/U_h"))),
                               g.param(prefix + "/b_h")));
  return add(mul(z, h), mul(one_minus(z), c));
}

StdDevNetwork StdDevNetwork::create(ParameterStore& store, std::string prefix, int latent_dim, Rng& rng) {
  StdDevNetwork n;
  for (int i = 0; i < 3; ++i) {
    n.hidden.push_back(Dense::create(store, prefix + "/fc" + std::to_string(i), latent_dim, latent_dim,
                                     Activation::celu_capped, rng));
  }
  n.output = Dense::create(store, prefix + "/out", latent_dim, latent_dim, Activation::sigmoid, rng,
                           diff::InitSpec::zeros(), diff::InitSpec::constant(-5.0));
  return n;
}

Var StdDevNetwork::forward(Graph& g, Var mu) const {
  Var h = mu;
  for (const auto& d : hidden) h = d.forward(g, h);
  return output.forward(g, h);
}

Var broadcast_rows(Graph& g, Var row, Eigen::Index rows) {
  return diff::add_bias(g.constant(Matrix::Zero(rows, row.cols())), row);
}

}  // namespace treevae::nn
