#pragma once

#include "treevae/autodiff.hpp"
#include "treevae/parameters.hpp"

#include <string>

namespace treevae::nn {

using diff::Graph;
using diff::Matrix;
using diff::ParameterStore;
using diff::Var;

enum class Activation { linear, sigmoid, celu, celu_capped };

Var activate(Var x, Activation act);

// Fully-connected layer y = act(x W + b), W is in x out.
struct Dense {
  std::string prefix;
  int in = 0;
  int out = 0;
  Activation activation = Activation::celu;

  static Dense create(ParameterStore& store, std::string prefix, int in, int out, Activation act, Rng& rng,
                      diff::InitSpec weights = diff::InitSpec::variance_scaled(),
                      diff::InitSpec bias = diff::InitSpec::zeros());

  Var forward(Graph& g, Var x) const;
};

// GRU with a capped-CELU candidate:
//   z = sigmoid(x W_z + h U_z + b_z)
//   r = sigmoid(x W_r + h U_r + b_r)
//   c = min(celu(x W_h + (r * h) U_h + b_h, 3), 6)
//   h' = z * h + (1 - z) * c
// The update gate starts with zero weights and unit bias so the cell leans
// towards keeping its state.
struct GruCell {
  std::string prefix;
  int input_dim = 0;
  int state_dim = 0;

  static GruCell create(ParameterStore& store, std::string prefix, int input_dim, int state_dim, Rng& rng);

  Var step(Graph& g, Var x, Var h) const;
  // Update gate activations for inspection.
  Var update_gate(Graph& g, Var x, Var h) const;
};

// Maps a mean vector to the posterior standard deviation, elementwise in
// (0, 1). The output layer starts at zero weights and bias -5.
struct StdDevNetwork {
  std::vector<Dense> hidden;
  Dense output;

  static StdDevNetwork create(ParameterStore& store, std::string prefix, int latent_dim, Rng& rng);
  Var forward(Graph& g, Var mu) const;
};

// Broadcast a 1 x n parameter to rows x n.
Var broadcast_rows(Graph& g, Var row, Eigen::Index rows);

}  // namespace treevae::nn
