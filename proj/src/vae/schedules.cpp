#include "treevae/vae/schedules.hpp"

#include <algorithm>
#include <cmath>

namespace treevae::vae {

double piecewise_linear(double start, double mid, double end, std::int64_t warmup, std::int64_t total,
                        std::int64_t step) {
  if (step < 0) throw std::invalid_argument("schedule step must be >= 0");
  if (step >= total) return end;
  if (step < warmup) return start + (mid - start) * static_cast<double>(step) / static_cast<double>(warmup);
  if (step == warmup) return mid;
  return mid + (end - mid) * static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
}

double beta_at(const TrainConfig& cfg, std::int64_t step) {
  return piecewise_linear(cfg.beta_start, cfg.beta_mid, cfg.beta_end, cfg.warmup_steps, cfg.steps, step);
}

double beta_max_at(const TrainConfig& cfg, std::int64_t step) {
  if (step < 0) throw std::invalid_argument("schedule step must be >= 0");
  if (step >= cfg.warmup_steps) return cfg.beta_max_end;
  return cfg.beta_max_start +
         (cfg.beta_max_end - cfg.beta_max_start) * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
}

double p_gt_at(SamplingMode mode, std::int64_t warmup, std::int64_t step) {
  switch (mode) {
    case SamplingMode::teacher_forcing: return 1.0;
    case SamplingMode::always_sampling: return 0.0;
    case SamplingMode::scheduled:
      if (step >= warmup) return 0.0;
      return 1.0 - static_cast<double>(step) / static_cast<double>(warmup);
  }
  return 1.0;
}

std::vector<double> p_sampled_spacing(PSpacing spacing, int n, double p_constant, double p_min, double p_max) {
  if (n < 1) throw std::invalid_argument("need at least one level");
  std::vector<double> p(static_cast<std::size_t>(n), p_constant);
  if (spacing == PSpacing::constant || n == 1) {
    if (spacing != PSpacing::constant) p[0] = p_max;
    return p;
  }
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    p[static_cast<std::size_t>(i)] =
        spacing == PSpacing::linear ? p_min + (p_max - p_min) * t : p_min * std::pow(p_max / p_min, t);
  }
  return p;
}

MultiscaleBank multiscale_assign(const TrainConfig& cfg) {
  MultiscaleBank bank;
  bank.mode = cfg.multiscale;
  bank.gamma = cfg.capacity_gamma;
  if (cfg.multiscale == MultiscaleMode::off) {
    bank.levels.push_back(Level{1.0, 0.0, cfg.p_sampled});
    return bank;
  }
  const int n = cfg.n_kl_weight;
  if (n < 1) throw ConfigError("n_kl_weight must be >= 1");
  const bool geometric = cfg.multiscale == MultiscaleMode::geometric || cfg.multiscale == MultiscaleMode::inverted;
  if (geometric && !(cfg.geometric_ratio > 0.0 && cfg.geometric_ratio < 1.0)) {
    throw ConfigError("geometric_ratio must lie in (0, 1)");
  }
  const auto ps = p_sampled_spacing(cfg.p_spacing, n, cfg.p_sampled, cfg.p_min, cfg.p_max);
  for (int i = 0; i < n; ++i) {
    Level l;
    l.beta_fraction = geometric ? std::pow(cfg.geometric_ratio, n - 1 - i) : static_cast<double>(i + 1) / n;
    if (cfg.multiscale == MultiscaleMode::capacity) l.capacity = cfg.capacity_min + i * cfg.capacity_increment;
    l.p_sampled = ps[static_cast<std::size_t>(i)];
    bank.levels.push_back(l);
  }
  return bank;
}

double level_objective(MultiscaleMode mode, double recon, double kl_per_dim, double beta, double capacity,
                       double gamma, int latent_dim) {
  switch (mode) {
    case MultiscaleMode::inverted:
      if (beta <= 0.0) throw std::invalid_argument("inverted objective needs beta > 0");
      return recon / beta + kl_per_dim;
    case MultiscaleMode::capacity:
      return recon + gamma * std::max(kl_per_dim - capacity / latent_dim, 0.0);
    default:
      return recon + beta * kl_per_dim;
  }
}

}  // namespace treevae::vae
