#include "treevae/vae/latent.hpp"

#include "treevae/checkpoint.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace treevae::vae {

double kl_diag_gaussian(const diff::RowVector& mu, const diff::RowVector& sigma) {
  if (mu.size() != sigma.size()) throw std::invalid_argument("kl: size mismatch");
  if ((sigma.array() <= 0.0).any()) throw std::invalid_argument("kl: sigma must be positive");
  const auto s2 = sigma.array().square();
  return 0.5 * (mu.array().square() + s2 - 1.0 - s2.log()).sum();
}

Var kl_rows(Var mu, Var sigma) {
  using namespace diff;
  if ((sigma.value().array() <= 0.0).any()) throw std::invalid_argument("kl: sigma must be positive");
  Var inner = sub(add_scalar(add(square(mu), square(sigma)), -1.0), scale(log(sigma), 2.0));
  return scale(row_sum(inner), 0.5);
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

Var reparameterize(Graph& g, Var mu, Var sigma, const Matrix& eps) {
  if (eps.rows() != mu.rows() || eps.cols() != mu.cols()) throw std::invalid_argument("reparameterize: shape mismatch");
  return diff::add(mu, diff::mul(sigma, g.constant(eps)));
}

LatentMomentTracker::LatentMomentTracker(int dim, double decay)
    : dim_(dim), decay_(decay), mean_(diff::Vector::Zero(dim)), cov_(Matrix::Identity(dim, dim)) {
  if (dim <= 0) throw std::invalid_argument("tracker dim must be positive");
}

void LatentMomentTracker::update(const Matrix& z) {
  if (z.cols() != dim_) throw std::invalid_argument("tracker: wrong latent width");
  if (z.rows() < 2) throw std::invalid_argument("tracker: batch of at least 2 needed");
  const diff::Vector mu_b = z.colwise().mean().transpose();
  const Matrix centered = z.rowwise() - mu_b.transpose();
  Matrix cov_b = centered.transpose() * centered / static_cast<double>(z.rows() - 1);
  cov_b = 0.5 * (cov_b + cov_b.transpose());
  if (observed_ == 0) {
    mean_ = mu_b;
    cov_ = cov_b;
  } else {
    mean_ = decay_ * mean_ + (1.0 - decay_) * mu_b;
    cov_ = decay_ * cov_ + (1.0 - decay_) * cov_b;
  }
  observed_ += z.rows();
}

void LatentMomentTracker::set(const diff::Vector& mean, const Matrix& cov) {
  if (mean.size() != dim_ || cov.rows() != dim_ || cov.cols() != dim_) throw std::invalid_argument("tracker: bad shape");
  mean_ = mean;
  cov_ = 0.5 * (cov + cov.transpose());
  observed_ = std::max<std::int64_t>(observed_, dim_);
}

std::pair<Matrix, double> LatentMomentTracker::factor() const {
  if (observed_ < dim_) {
    throw CholeskyError("latent tracker has seen " + std::to_string(observed_) + " vectors, needs " +
                        std::to_string(dim_));
  }
  double jitter = 1e-6 * cov_.trace() / dim_;
  if (!(jitter > 0.0)) jitter = 1e-12;
  for (int attempt = 0; attempt <= 3; ++attempt, jitter *= 10.0) {
    Eigen::LLT<Matrix> llt(cov_ + jitter * Matrix::Identity(dim_, dim_));
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
  }
  throw CholeskyError("latent covariance not positive definite after jitter escalation");
}

Matrix LatentMomentTracker::sample(int n, Rng& rng) const {
  const auto [l, jitter] = factor();
  (void)jitter;
  Matrix z = standard_normal(n, dim_, rng) * l.transpose();
  z.rowwise() += mean_.transpose();
  return z;
}

nlohmann::json LatentMomentTracker::to_json() const {
  return {{"dim", dim_}, {"decay", decay_}, {"observed", observed_},
          {"mean", matrix_to_json(mean_)}, {"cov", matrix_to_json(cov_)}};
}

LatentMomentTracker LatentMomentTracker::from_json(const nlohmann::json& j) {
  LatentMomentTracker t(j.at("dim").get<int>(), j.at("decay").get<double>());
  t.mean_ = matrix_from_json(j.at("mean"));
  t.cov_ = matrix_from_json(j.at("cov"));
  t.observed_ = j.at("observed").get<std::int64_t>();
  if (t.mean_.size() != t.dim_ || t.cov_.rows() != t.dim_) throw std::runtime_error("tracker: inconsistent checkpoint");
  return t;
}

AugmentedPool::AugmentedPool(int size, double p_sampled) : size_(size), p_(p_sampled) {
  if (size <= 0) throw std::invalid_argument("pool size must be positive");
  if (!(p_sampled > 0.0 && p_sampled <= 1.0)) throw std::invalid_argument("p_sampled must lie in (0, 1]");
}

void AugmentedPool::initialize(const Matrix& batch_latents, std::int64_t step) {
  if (batch_latents.rows() < size_) throw std::invalid_argument("pool: batch smaller than the pool");
  latents_ = batch_latents.topRows(size_);
  born_.assign(static_cast<std::size_t>(size_), step);
}

int AugmentedPool::advance(const Matrix& fresh, const Matrix& variants, std::int64_t step, Rng& rng) {
  if (!initialized()) throw std::logic_error("pool not initialized");
  if (variants.rows() != size_ || variants.cols() != latents_.cols()) throw std::invalid_argument("pool: bad variants");
  if (fresh.rows() < size_ || fresh.cols() != latents_.cols()) {
    throw std::invalid_argument("pool: needs at least n_augmented fresh latents");
  }
  std::vector<int> order(static_cast<std::size_t>(fresh.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  int restarted = 0;
  for (int i = 0; i < size_; ++i) {
    const auto e = static_cast<std::size_t>(i);
    if (uniform01(rng) < p_) {
      latents_.row(i) = fresh.row(order[static_cast<std::size_t>(restarted)]);
      lifetime_sum_ += step - born_[e];
      ++completed_;
      born_[e] = step;
      ++restarted;
    } else {
      latents_.row(i) = variants.row(i);
    }
  }
  return restarted;
}

double simulate_pool_lifetime(double p_sampled, int pool_size, std::int64_t steps, std::uint64_t seed) {
  AugmentedPool pool(pool_size, p_sampled);
  Rng rng = derive_rng(seed, "pool-simulation");
  const Matrix zeros = Matrix::Zero(pool_size, 1);
  pool.initialize(zeros, 0);
  for (std::int64_t t = 1; t <= steps; ++t) pool.advance(zeros, zeros, t, rng);
  return pool.mean_lifetime();
}

}  // namespace treevae::vae
