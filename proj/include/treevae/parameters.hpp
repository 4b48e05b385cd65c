#pragma once

#include "treevae/autodiff.hpp"
#include "treevae/rng.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace treevae::diff {

struct Parameter {
  Matrix value;
  Matrix first_moment;
  Matrix second_moment;
};

class ParameterStore {
 public:
  // Throws std::invalid_argument if the name is taken.
  Matrix& add(const std::string& name, Matrix value);

  bool contains(std::string_view name) const { return params_.find(name) != params_.end(); }
  const Matrix& value(std::string_view name) const;
  Matrix& value(std::string_view name);
  const Parameter& entry(std::string_view name) const;
  Parameter& entry(std::string_view name);

  const std::map<std::string, Parameter, std::less<>>& entries() const { return params_; }
  std::size_t scalar_count() const;

  // Number of optimizer updates applied so far.
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

 private:
  std::map<std::string, Parameter, std::less<>> params_;
  std::int64_t step_ = 0;
};

struct InitSpec {
  enum class Kind { variance_scaled, zeros, ones, uniform01, constant };
  Kind kind = Kind::zeros;
  double value = 0.0;
  // Defaults to the row count (input dimension) of the initialized matrix.
  int fan_in = 0;

  static InitSpec variance_scaled(int fan_in = 0) { return {Kind::variance_scaled, 0.0, fan_in}; }
  static InitSpec zeros() { return {Kind::zeros, 0.0, 0}; }
  static InitSpec ones() { return {Kind::ones, 1.0, 0}; }
  static InitSpec uniform01() { return {Kind::uniform01, 0.0, 0}; }
  static InitSpec constant(double c) { return {Kind::constant, c, 0}; }
};

// variance_scaled draws N(0, 1/sqrt(fan_in)) and resamples anything beyond
// two standard deviations.
Matrix init(const InitSpec& spec, Eigen::Index rows, Eigen::Index cols, Rng& rng);

struct AdamConfig {
  double learning_rate = 2.5e-4;
  double decay_rate = 0.99;
  double decay_steps = 1000.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// lr(t) = lr0 * decay_rate^(t / decay_steps), evaluated every step.
double learning_rate(const AdamConfig& cfg, std::int64_t step);

// Applies one bias-corrected Adam update at the store's current step and
// advances the step counter. Every gradient must name a stored parameter.
void adam_step(ParameterStore& store, const Gradients& grads, const AdamConfig& cfg);

double global_norm(const Gradients& grads);

// Rescales every gradient by max_norm/g when the global L2 norm g exceeds
// max_norm. Returns g.
double clip_global_norm(Gradients& grads, double max_norm);

}  // namespace treevae::diff
