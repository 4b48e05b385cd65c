#include "treevae/nn/scalar_tuple.hpp"

#include "treevae/checkpoint.hpp"

#include <Eigen/SVD>

namespace treevae::nn {

Whitener::Whitener(int dim, double decay, double epsilon)
    : dim_(dim), decay_(decay), epsilon_(epsilon), mean_(diff::Vector::Zero(dim)), cov_(Matrix::Identity(dim, dim)) {
  refresh();
}

void Whitener::set(const diff::Vector& mean, const Matrix& cov) {
  if (mean.size() != dim_ || cov.rows() != dim_ || cov.cols() != dim_) throw std::invalid_argument("whitener: bad stats shape");
  if (!mean.allFinite() || !cov.allFinite()) throw std::invalid_argument("whitener: non-finite statistics");
  mean_ = mean;
  cov_ = 0.5 * (cov + cov.transpose());
  updates_ = std::max<std::int64_t>(updates_, 1);
  refresh();
}

void Whitener::update(const Matrix& batch) {
  if (batch.cols() != dim_) throw std::invalid_argument("whitener: batch has wrong width");
  if (batch.rows() < 2) throw std::invalid_argument("whitener: covariance needs a batch of at least 2");
  const diff::Vector mu_b = batch.colwise().mean().transpose();
  const Matrix centered = batch.rowwise() - mu_b.transpose();
  Matrix cov_b = centered.transpose() * centered / static_cast<double>(batch.rows() - 1);
  cov_b = 0.5 * (cov_b + cov_b.transpose());
  if (!mu_b.allFinite() || !cov_b.allFinite()) throw std::invalid_argument("whitener: non-finite batch");
  if (updates_ == 0) {
    mean_ = mu_b;
    cov_ = cov_b;
  } else {
    mean_ = decay_ * mean_ + (1.0 - decay_) * mu_b;
    cov_ = decay_ * cov_ + (1.0 - decay_) * cov_b;
  }
  ++updates_;
  refresh();
}

void Whitener::refresh() {
  const Matrix reg = cov_ + epsilon_ * Matrix::Identity(dim_, dim_);
  Eigen::JacobiSVD<Matrix> svd(reg, Eigen::ComputeFullU);
  u_ = svd.matrixU();
  inv_sqrt_ = svd.singularValues().transpose().array().rsqrt().matrix();
  if (!u_.allFinite() || !inv_sqrt_.allFinite()) throw std::runtime_error("whitener: non-finite statistics");
}

Matrix Whitener::whiten(const Matrix& x) const {
  if (x.cols() != dim_) throw std::invalid_argument("whiten: wrong width");
  if (!initialized()) throw std::logic_error("whiten: statistics not initialized");
  Matrix xw = (x.rowwise() - mean_.transpose()) * u_;
  xw.array().rowwise() *= inv_sqrt_.array();
  return xw;
}

Matrix Whitener::unwhiten(const Matrix& xw) const {
  if (xw.cols() != dim_) throw std::invalid_argument("unwhiten: wrong width");
  if (!initialized()) throw std::logic_error("unwhiten: statistics not initialized");
  Matrix scaled = xw;
  scaled.array().rowwise() /= inv_sqrt_.array();
  Matrix x = scaled * u_.transpose();
  x.rowwise() += mean_.transpose();
  return x;
}

nlohmann::json Whitener::to_json() const {
  return {{"dim", dim_},     {"decay", decay_},
          {"epsilon", epsilon_}, {"updates", updates_},
          {"mean", matrix_to_json(mean_)}, {"cov", matrix_to_json(cov_)}};
}

Whitener Whitener::from_json(const nlohmann::json& j) {
  Whitener w(j.at("dim").get<int>(), j.at("decay").get<double>(), j.at("epsilon").get<double>());
  w.mean_ = matrix_from_json(j.at("mean"));
  w.cov_ = matrix_from_json(j.at("cov"));
  w.updates_ = j.at("updates").get<std::int64_t>();
  w.refresh();
  return w;
}

ScalarTuple ScalarTuple::create(ParameterStore& store, std::string prefix, int dim, int latent, Rng& rng) {
  ScalarTuple m;
  m.prefix_ = std::move(prefix);
  m.whitener_ = Whitener(dim);
  m.encoder_ = Dense::create(store, m.prefix_ + "/encoder", dim, latent, Activation::sigmoid, rng);
  m.decoder_ = Dense::create(store, m.prefix_ + "/decoder", latent, dim, Activation::linear, rng);
  return m;
}

Var ScalarTuple::encode(Graph& g, const Matrix& raw) const {
  return encoder_.forward(g, g.constant(whitener_.whiten(raw)));
}

ScalarLoss ScalarTuple::decode_loss(Graph& g, Var embeddings, const Matrix& raw, std::span<const double> weights) const {
  if (embeddings.rows() != raw.rows() || static_cast<Eigen::Index>(weights.size()) != raw.rows()) {
    throw std::invalid_argument("scalar decode: size mismatch");
  }
  Var pred = decoder_.forward(g, embeddings);
  Var err = diff::row_sum(diff::square(diff::sub(pred, g.constant(whitener_.whiten(raw)))));
  Matrix w(raw.rows(), 1);
  ScalarLoss out;
  out.sq_err.resize(static_cast<std::size_t>(raw.rows()));
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    w(i, 0) = weights[static_cast<std::size_t>(i)];
    out.sq_err[static_cast<std::size_t>(i)] = err.value()(i, 0);
  }
  out.weighted = diff::sum(diff::mul(err, g.constant(std::move(w))));
  return out;
}

Matrix ScalarTuple::generate(Graph& g, Var embeddings) const {
  return whitener_.unwhiten(decoder_.forward(g, embeddings).value());
}

}  // namespace treevae::nn
