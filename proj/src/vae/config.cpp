#include "treevae/vae/config.hpp"

#include <cmath>

namespace treevae::vae {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

}  // namespace

std::string_view to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::teacher_forcing: return "tf";
    case SamplingMode::always_sampling: return "as";
    case SamplingMode::scheduled: return "ss";
  }
  return "?";
}

SamplingMode parse_sampling_mode(std::string_view s) {
  if (s == "tf") return SamplingMode::teacher_forcing;
  if (s == "as") return SamplingMode::always_sampling;
  if (s == "ss") return SamplingMode::scheduled;
  fail("unknown sampling mode '" + std::string(s) + "' (tf, as, ss)");
}

std::string_view to_string(MultiscaleMode m) {
  switch (m) {
    case MultiscaleMode::off: return "off";
    case MultiscaleMode::linear: return "linear";
    case MultiscaleMode::geometric: return "geometric";
    case MultiscaleMode::inverted: return "inverted";
    case MultiscaleMode::capacity: return "capacity";
  }
  return "?";
}

MultiscaleMode parse_multiscale_mode(std::string_view s) {
  for (auto m : {MultiscaleMode::off, MultiscaleMode::linear, MultiscaleMode::geometric, MultiscaleMode::inverted,
                 MultiscaleMode::capacity}) {
    if (s == to_string(m)) return m;
  }
  fail("unknown multiscale mode '" + std::string(s) + "'");
}

std::string_view to_string(PSpacing s) {
  switch (s) {
    case PSpacing::constant: return "constant";
    case PSpacing::linear: return "linear";
    case PSpacing::geometric: return "geometric";
  }
  return "?";
}

PSpacing parse_p_spacing(std::string_view s) {
  for (auto p : {PSpacing::constant, PSpacing::linear, PSpacing::geometric}) {
    if (s == to_string(p)) return p;
  }
  fail("unknown p_sampled spacing '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (steps < 0) fail("steps must be >= 0");
  if (batch_size < 2) fail("batch_size must be >= 2");
  if (latent_dim <= 0 || state_dim <= 0 || embed_dim <= 0) fail("dimensions must be positive");
  if (max_string_length <= 0) fail("max_string_length must be positive");
  for (double b : {beta_start, beta_mid, beta_end, beta_max_start, beta_max_end}) {
    if (!(b >= 0.0) || !std::isfinite(b)) fail("beta values must be finite and >= 0");
  }
  if (warmup_steps < 0 || warmup_steps > steps) fail("warmup_steps must lie in [0, steps]");
  if (!(p_sampled > 0.0 && p_sampled <= 1.0)) fail("p_sampled must lie in (0, 1]");
  if (n_augmented < 0) fail("n_augmented must be >= 0");
  if (n_augmented > batch_size) fail("n_augmented must not exceed batch_size");
  if (gen_start_step < 0) fail("gen_start_step must be >= 0");
  if (multiscale != MultiscaleMode::off) {
    if (n_kl_weight < 1) fail("n_kl_weight must be >= 1");
    if (beta_max_end <= 0.0) fail("beta_max_end must be positive");
    if ((multiscale == MultiscaleMode::geometric || multiscale == MultiscaleMode::inverted) &&
        !(geometric_ratio > 0.0 && geometric_ratio < 1.0)) {
      fail("geometric_ratio must lie in (0, 1)");
    }
    if (multiscale == MultiscaleMode::inverted && beta_max_start <= 0.0) {
      fail("inverted objective needs beta_max_start > 0");
    }
    if (multiscale == MultiscaleMode::capacity && (capacity_min < 0.0 || capacity_gamma < 0.0)) {
      fail("capacity parameters must be >= 0");
    }
  }
  if (p_spacing != PSpacing::constant) {
    if (!(p_min > 0.0 && p_min <= p_max && p_max <= 1.0)) fail("need 0 < p_min <= p_max <= 1");
  }
  if (clip_norm <= 0.0) fail("clip_norm must be positive");
  if (!(tracker_decay >= 0.0 && tracker_decay < 1.0)) fail("tracker_decay must lie in [0, 1)");
  for (double w : field_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail("field weights must be finite and >= 0");
  }
  if (log_every <= 0 || eval_every <= 0) fail("log_every and eval_every must be positive");
  if (eval_samples < 2) fail("eval_samples must be >= 2");
  if (adam.learning_rate <= 0.0) fail("learning_rate must be positive");
}

}  // namespace treevae::vae
