#include "treevae/parameters.hpp"

#include <cmath>

namespace treevae::diff {

Matrix& ParameterStore::add(const std::string& name, Matrix value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  Parameter p;
  p.first_moment = Matrix::Zero(value.rows(), value.cols());
  p.second_moment = Matrix::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  return params_.emplace(name, std::move(p)).first->second.value;
}

const Parameter& ParameterStore::entry(std::string_view name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

Parameter& ParameterStore::entry(std::string_view name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Matrix& ParameterStore::value(std::string_view name) const { return entry(name).value; }
Matrix& ParameterStore::value(std::string_view name) { return entry(name).value; }

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Matrix init(const InitSpec& spec, Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  switch (spec.kind) {
    case InitSpec::Kind::zeros: return Matrix::Zero(rows, cols);
    case InitSpec::Kind::ones: return Matrix::Ones(rows, cols);
    case InitSpec::Kind::constant: return Matrix::Constant(rows, cols, spec.value);
    case InitSpec::Kind::uniform01: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Matrix m(rows, cols);
      for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
      }
      return m;
    }
    case InitSpec::Kind::variance_scaled: {
      const int fan_in = spec.fan_in > 0 ? spec.fan_in : static_cast<int>(rows);
      if (fan_in <= 0) throw std::invalid_argument("variance_scaled init needs a positive fan_in");
      const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::normal_distribution<double> normal(0.0, stddev);
      Matrix m(rows, cols);
      for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
          double x;
          do {
            x = normal(rng);
          } while (std::abs(x) > 2.0 * stddev);
          m(i, j) = x;
        }
      }
      return m;
    }
  }
  throw std::logic_error("unhandled init kind");
}

double learning_rate(const AdamConfig& cfg, std::int64_t step) {
  return cfg.learning_rate * std::pow(cfg.decay_rate, static_cast<double>(step) / cfg.decay_steps);
}

void adam_step(ParameterStore& store, const Gradients& grads, const AdamConfig& cfg) {
  for (const auto& [name, g] : grads) {
    const Parameter& p = store.entry(name);
    if (g.rows() != p.value.rows() || g.cols() != p.value.cols()) {
      throw std::invalid_argument("gradient for '" + name + "' is misaligned with its parameter");
    }
  }
  const std::int64_t t = store.step() + 1;
  const double lr = learning_rate(cfg, store.step());
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (const auto& [name, g] : grads) {
    Parameter& p = store.entry(name);
    p.first_moment = cfg.beta1 * p.first_moment + (1.0 - cfg.beta1) * g;
    p.second_moment = cfg.beta2 * p.second_moment + (1.0 - cfg.beta2) * g.cwiseAbs2();
    p.value.array() -= lr * (p.first_moment.array() / c1) / ((p.second_moment.array() / c2).sqrt() + cfg.epsilon);
  }
  store.set_step(t);
}

double global_norm(const Gradients& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads) s += g.squaredNorm();
  return std::sqrt(s);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  if (!(max_norm > 0)) throw std::invalid_argument("clip max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [name, g] : grads) g *= f;
  }
  return norm;
}

}  // namespace treevae::diff
