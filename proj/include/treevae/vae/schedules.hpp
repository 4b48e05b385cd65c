#pragma once

#include "treevae/vae/config.hpp"

#include <cstdint>
#include <vector>

namespace treevae::vae {

// Linear start -> mid over [0, warmup], then mid -> end over [warmup, total].
// Past `total` the value stays at `end`.
double piecewise_linear(double start, double mid, double end, std::int64_t warmup, std::int64_t total,
                        std::int64_t step);

double beta_at(const TrainConfig& cfg, std::int64_t step);
// beta_max_start -> beta_max_end over the warm-up, constant afterwards.
double beta_max_at(const TrainConfig& cfg, std::int64_t step);
// Ground-truth probability: 1 for tf, 0 for as, 1 -> 0 over the warm-up for ss.
double p_gt_at(SamplingMode mode, std::int64_t warmup, std::int64_t step);

struct Level {
  double beta_fraction = 1.0;  // beta_i = beta_fraction * beta_max
  double capacity = 0.0;       // capacity mode only, in nats
  double p_sampled = 1.0;
};

struct MultiscaleBank {
  MultiscaleMode mode = MultiscaleMode::off;
  std::vector<Level> levels;
  double gamma = 128.0;

  int size() const { return static_cast<int>(levels.size()); }
  double beta(int level, double beta_max) const { return levels.at(static_cast<std::size_t>(level)).beta_fraction * beta_max; }
  // Batch t trains level t mod n.
  int level_for_batch(std::int64_t t) const { return static_cast<int>(t % static_cast<std::int64_t>(levels.size())); }
};

// linear:    beta_i = (i + 1) / n * beta_max
// geometric: beta_i = r^(n - 1 - i) * beta_max (also used by inverted)
// capacity:  linear spacing plus C_i = C_min + i * C_increment
// With multiscale off there is one level with fraction 1.
MultiscaleBank multiscale_assign(const TrainConfig& cfg);

// Per-level p_sampled between p_min and p_max, increasing with the level.
std::vector<double> p_sampled_spacing(PSpacing spacing, int n, double p_constant, double p_min, double p_max);

// Per-record level objective from the batch means.
//   standard:  recon + beta * kl_per_dim
//   inverted:  recon / beta + kl_per_dim
//   capacity:  recon + gamma * max(kl_per_dim - C / d, 0)
double level_objective(MultiscaleMode mode, double recon, double kl_per_dim, double beta, double capacity,
                       double gamma, int latent_dim);

}  // namespace treevae::vae
