#pragma once

#include "treevae/vae/config.hpp"
#include "treevae/vae/latent.hpp"
#include "treevae/vae/model.hpp"
#include "treevae/vae/schedules.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace treevae::vae {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One line of the metrics log.
struct MetricRow {
  std::int64_t step = 0;
  std::string split;  // train | test | generated
  double loss = 0.0;
  double bpc = 0.0;
  double kl = 0.0;
  double beta = 0.0;
  double p_gt = 0.0;
  int level = 0;
};

inline constexpr std::string_view kMetricsHeader = "step,split,loss,bpc,kl,beta,p_gt,level";
std::string to_csv(const MetricRow& row);

struct StepInfo {
  std::int64_t step = 0;
  int level = 0;
  double beta = 0.0;
  double p_gt_tuple = 1.0;
  double p_gt_string = 1.0;
  int real_rows = 0;
  int augmented_rows = 0;
  double grad_norm = 0.0;
  LossReport report;
};

class Trainer {
 public:
  Trainer(TreeVae& model, TrainConfig cfg, std::vector<Record> train, std::vector<Record> test = {});

  std::int64_t step_index() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  const MultiscaleBank& bank() const { return bank_; }
  const std::vector<MetricRow>& metrics() const { return metrics_; }
  const std::optional<AugmentedPool>& pool(int level) const { return pools_.at(static_cast<std::size_t>(level)); }

  // Loss options for a training step at `step` and `level`.
  LossOptions options_at(std::int64_t step, int level) const;

  StepInfo train_step();
  // test and generated rows at the current step.
  void evaluate();
  // Runs to cfg.steps; `on_row` sees every metrics row as it is produced.
  void run(const std::function<void(const MetricRow&)>& on_row = {});

 private:
  std::vector<Record> next_batch();
  void emit(MetricRow row);

  TreeVae& model_;
  TrainConfig cfg_;
  std::vector<Record> train_;
  std::vector<Record> test_;
  MultiscaleBank bank_;
  std::vector<std::optional<AugmentedPool>> pools_;
  std::int64_t step_ = 0;
  Rng data_rng_;
  Rng train_rng_;
  Rng gen_rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::vector<MetricRow> metrics_;
  std::function<void(const MetricRow&)> on_row_;
};

// Feeds sampled latents of `records` through the (possibly untrained) model
// into its moment tracker, and seeds its scalar statistics, without touching
// parameters.
void calibrate_statistics(TreeVae& model, std::span<const Record> records, int batch_size, std::uint64_t seed);

}  // namespace treevae::vae
