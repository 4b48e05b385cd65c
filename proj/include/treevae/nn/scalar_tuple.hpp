#pragma once

#include "treevae/nn/layers.hpp"

#include <json.hpp>

namespace treevae::nn {

// Moving mean/covariance of a k-dimensional scalar group and the PCA
// whitening they define:
//   U D V^T = Sigma + eps I,   x_w = (x - mu) U D^(-1/2)
// The SVD factors are refreshed whenever the statistics change.
class Whitener {
 public:
  static constexpr double kDecay = 0.999;
  static constexpr double kEpsilon = 1e-5;

  explicit Whitener(int dim = 2, double decay = kDecay, double epsilon = kEpsilon);

  int dim() const { return dim_; }
  bool initialized() const { return updates_ > 0; }
  std::int64_t updates() const { return updates_; }
  const diff::Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

  // Seeds the statistics explicitly.
  void set(const diff::Vector& mean, const Matrix& cov);
  // mu <- a mu + (1 - a) mu_B, Sigma <- a Sigma + (1 - a) cov(B). The first
  // update of an unseeded whitener copies the batch statistics. Rows are
  // observations; needs at least two.
  void update(const Matrix& batch);

  Matrix whiten(const Matrix& x) const;
  Matrix unwhiten(const Matrix& xw) const;

  nlohmann::json to_json() const;
  static Whitener from_json(const nlohmann::json& j);

 private:
  void refresh();

  int dim_;
  double decay_;
  double epsilon_;
  std::int64_t updates_ = 0;
  diff::Vector mean_;
  Matrix cov_;
  Matrix u_;                 // left singular vectors
  diff::RowVector inv_sqrt_;  // D^(-1/2)
};

struct ScalarLoss {
  Var weighted;                 // sum_i weight_i * sq_err_i
  std::vector<double> sq_err;   // per row, summed over components
};

// Encoder: whitened input -> sigmoid layer. Decoder: linear layer predicting
// the whitened values, scored by the summed squared error.
class ScalarTuple {
 public:
  static ScalarTuple create(ParameterStore& store, std::string prefix, int dim, int latent, Rng& rng);

  Whitener& whitener() { return whitener_; }
  const Whitener& whitener() const { return whitener_; }

  Var encode(Graph& g, const Matrix& raw) const;
  ScalarLoss decode_loss(Graph& g, Var embeddings, const Matrix& raw, std::span<const double> weights) const;
  // Un-whitened predictions.
  Matrix generate(Graph& g, Var embeddings) const;
  Var predict_whitened(Graph& g, Var embeddings) const { return decoder_.forward(g, embeddings); }

  int dim() const { return whitener_.dim(); }

 private:
  std::string prefix_;
  Whitener whitener_;
  Dense encoder_;
  Dense decoder_;
};

}  // namespace treevae::nn
