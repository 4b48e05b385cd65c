#pragma once

#include "treevae/autodiff.hpp"
#include "treevae/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace treevae::vae {

using diff::Graph;
using diff::Matrix;
using diff::Var;

// KL(N(mu, diag sigma^2) || N(0, I)) = 1/2 sum_j (mu_j^2 + sigma_j^2 - 1 - ln sigma_j^2)
double kl_diag_gaussian(const diff::RowVector& mu, const diff::RowVector& sigma);
// Per row, rows x 1.
Var kl_rows(Var mu, Var sigma);

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);
// z = mu + sigma * eps
Var reparameterize(Graph& g, Var mu, Var sigma, const Matrix& eps);

class CholeskyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Moving mean and covariance of the sampled latent vectors, used to draw
// generation latents from N(mu, Sigma).
class LatentMomentTracker {
 public:
  explicit LatentMomentTracker(int dim = 1, double decay = 0.999);

  int dim() const { return dim_; }
  double decay() const { return decay_; }
  std::int64_t observed() const { return observed_; }
  const diff::Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

  // The first batch seeds the statistics; later ones blend in with `decay`.
  void update(const Matrix& z);
  void set(const diff::Vector& mean, const Matrix& cov);

  // Cholesky of Sigma + jitter I, jitter from 1e-6 trace / d, x10 up to three
  // times. Returns the lower factor and the jitter that worked.
  std::pair<Matrix, double> factor() const;
  Matrix sample(int n, Rng& rng) const;

  nlohmann::json to_json() const;
  static LatentMomentTracker from_json(const nlohmann::json& j);

 private:
  int dim_;
  double decay_;
  std::int64_t observed_ = 0;
  diff::Vector mean_;
  Matrix cov_;
};

// Pool of latent vectors whose decodings augment each training batch. After
// every step each entry restarts from a fresh sampled latent with
// probability p, otherwise it follows the sampled latent of its own variant.
class AugmentedPool {
 public:
  AugmentedPool(int size, double p_sampled);

  int size() const { return size_; }
  double p_sampled() const { return p_; }
  bool initialized() const { return latents_.rows() == size_; }
  const Matrix& latents() const { return latents_; }

  // Takes the first `size` rows of the batch's sampled latents.
  void initialize(const Matrix& batch_latents, std::int64_t step);
  // fresh: sampled latents of the real examples (>= size rows, picked without
  // replacement); variants: sampled latents of the variants, one per entry.
  // Returns the number of restarted entries.
  int advance(const Matrix& fresh, const Matrix& variants, std::int64_t step, Rng& rng);

  // Over completed lives.
  double mean_lifetime() const { return completed_ == 0 ? 0.0 : static_cast<double>(lifetime_sum_) / completed_; }
  std::int64_t completed_lives() const { return completed_; }

 private:
  int size_;
  double p_;
  Matrix latents_;
  std::vector<std::int64_t> born_;
  std::int64_t lifetime_sum_ = 0;
  std::int64_t completed_ = 0;
};

// Replacement process alone, without a model: mean observed lifetime of pool
// entries over `steps` steps.
double simulate_pool_lifetime(double p_sampled, int pool_size, std::int64_t steps, std::uint64_t seed);

}  // namespace treevae::vae
