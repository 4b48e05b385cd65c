#pragma once

#include "treevae/parameters.hpp"
#include "treevae/schema.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treevae::vae {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SamplingMode { teacher_forcing, always_sampling, scheduled };
std::string_view to_string(SamplingMode m);
SamplingMode parse_sampling_mode(std::string_view s);  // tf | as | ss

enum class MultiscaleMode { off, linear, geometric, inverted, capacity };
std::string_view to_string(MultiscaleMode m);
MultiscaleMode parse_multiscale_mode(std::string_view s);

enum class PSpacing { constant, linear, geometric };
std::string_view to_string(PSpacing s);
PSpacing parse_p_spacing(std::string_view s);

struct TrainConfig {
  std::int64_t steps = 2'000'000;
  int batch_size = 256;
  std::uint64_t seed = 1;

  ModelVariant variant = ModelVariant::tuple;
  std::vector<std::string> omitted_fields;
  int latent_dim = 128;
  int state_dim = 128;
  int embed_dim = 16;
  int max_string_length = 64;

  double beta_start = 0.0;
  double beta_mid = 0.384;
  double beta_end = 0.384;
  std::int64_t warmup_steps = 1'000'000;

  SamplingMode tuple_sampling = SamplingMode::scheduled;
  SamplingMode string_sampling = SamplingMode::teacher_forcing;

  // Augmented training is on when n_augmented > 0.
  int n_augmented = 0;
  double p_sampled = 0.2;
  std::int64_t gen_start_step = 0;

  MultiscaleMode multiscale = MultiscaleMode::off;
  int n_kl_weight = 32;
  double geometric_ratio = 0.9;
  double beta_max_start = 0.0;
  double beta_max_end = 0.64;
  double capacity_min = 10.0;
  double capacity_increment = 0.5;
  double capacity_gamma = 128.0;
  PSpacing p_spacing = PSpacing::constant;
  double p_min = 0.2;
  double p_max = 0.2;

  diff::AdamConfig adam;
  double clip_norm = 0.01;

  double tracker_decay = 0.999;
  // Feed the latent tracker from the lowest-beta level only.
  bool tracker_lowest_level_only = false;
  // Skew loss inside the per-field average (true) or added on top.
  bool skew_in_average = true;
  // Per tuple element, empty means all 1.
  std::vector<double> field_weights;

  std::int64_t log_every = 100;
  std::int64_t eval_every = 1000;
  int eval_samples = 256;

  void validate() const;  // throws ConfigError
  bool augmented() const { return n_augmented > 0; }
  int levels() const { return multiscale == MultiscaleMode::off ? 1 : n_kl_weight; }
};

}  // namespace treevae::vae
