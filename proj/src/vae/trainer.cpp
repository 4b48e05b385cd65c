#include "treevae/vae/trainer.hpp"

#include "treevae/vae/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace treevae::vae {

std::string to_csv(const MetricRow& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.step << ',' << r.split << ',' << r.loss << ',' << r.bpc << ',' << r.kl << ',' << r.beta << ',' << r.p_gt
     << ',' << r.level;
  return os.str();
}

Trainer::Trainer(TreeVae& model, TrainConfig cfg, std::vector<Record> train, std::vector<Record> test)
    : model_(model),
      cfg_(std::move(cfg)),
      train_(std::move(train)),
      test_(std::move(test)),
      data_rng_(derive_rng(cfg_.seed, "data")),
      train_rng_(derive_rng(cfg_.seed, "train")),
      gen_rng_(derive_rng(cfg_.seed, "generate")) {
  cfg_.validate();
  if (static_cast<int>(train_.size()) < cfg_.batch_size) {
    throw ConfigError("training set has " + std::to_string(train_.size()) + " records, fewer than batch_size");
  }
  bank_ = multiscale_assign(cfg_);
  if (bank_.size() != model_.levels()) {
    throw ConfigError("model has " + std::to_string(model_.levels()) + " standard deviation networks, config needs " +
                      std::to_string(bank_.size()));
  }
  // The first update of the scalar statistics sees the whole training set.
  if (model_.whitener() != nullptr && !model_.whitener()->initialized()) model_.update_statistics(train_);
  pools_.resize(static_cast<std::size_t>(bank_.size()));
  if (cfg_.augmented()) {
    for (int i = 0; i < bank_.size(); ++i) {
      pools_[static_cast<std::size_t>(i)].emplace(cfg_.n_augmented, bank_.levels[static_cast<std::size_t>(i)].p_sampled);
    }
  }
  order_.resize(train_.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), data_rng_);
}

std::vector<Record> Trainer::next_batch() {
  std::vector<Record> batch;
  batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
  while (static_cast<int>(batch.size()) < cfg_.batch_size) {
    if (cursor_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), data_rng_);
      cursor_ = 0;
    }
    batch.push_back(train_[order_[cursor_++]]);
  }
  return batch;
}

LossOptions Trainer::options_at(std::int64_t step, int level) const {
  LossOptions opt;
  opt.level = level;
  opt.mode = bank_.mode;
  opt.beta = bank_.mode == MultiscaleMode::off ? beta_at(cfg_, step) : bank_.beta(level, beta_max_at(cfg_, step));
  opt.capacity = bank_.levels[static_cast<std::size_t>(level)].capacity;
  opt.gamma = bank_.gamma;
  opt.tuple_sampling = nn::Sampling::scheduled(p_gt_at(cfg_.tuple_sampling, cfg_.warmup_steps, step));
  opt.string_sampling = nn::Sampling::scheduled(p_gt_at(cfg_.string_sampling, cfg_.warmup_steps, step));
  opt.skew_in_average = cfg_.skew_in_average;
  opt.field_weights = cfg_.field_weights;
  return opt;
}

void Trainer::emit(MetricRow row) {
  if (on_row_) on_row_(row);
  metrics_.push_back(std::move(row));
}

StepInfo Trainer::train_step() {
  StepInfo info;
  info.step = step_;
  info.level = bank_.level_for_batch(step_);
  const LossOptions opt = options_at(step_, info.level);
  info.beta = opt.beta;
  info.p_gt_tuple = opt.tuple_sampling.p_gt;
  info.p_gt_string = opt.string_sampling.p_gt;

  std::vector<Record> batch = next_batch();
  model_.update_statistics(batch);
  info.real_rows = static_cast<int>(batch.size());

  auto& pool = pools_[static_cast<std::size_t>(info.level)];
  const bool augmenting = pool && step_ >= cfg_.gen_start_step;
  if (augmenting && pool->initialized()) {
    auto variants = model_.decode(pool->latents(), gen_rng_);
    info.augmented_rows = static_cast<int>(variants.size());
    for (auto& v : variants) batch.push_back(std::move(v));
  }

  diff::Graph g(&model_.store());
  Forward fwd;
  try {
    fwd = model_.loss(g, batch, opt, train_rng_);
    if (!std::isfinite(fwd.report.total)) throw diff::NonFiniteError("non-finite loss");
    g.backward(fwd.total);
  } catch (const diff::NonFiniteError& e) {
    throw TrainingDiverged("training diverged at step " + std::to_string(step_) + " (level " +
                           std::to_string(info.level) + ", beta " + std::to_string(opt.beta) + "): " + e.what());
  }
  diff::Gradients grads = g.reached_gradients();
  info.grad_norm = diff::clip_global_norm(grads, cfg_.clip_norm);
  if (!std::isfinite(info.grad_norm)) {
    throw TrainingDiverged("non-finite gradient norm at step " + std::to_string(step_));
  }
  diff::adam_step(model_.store(), grads, cfg_.adam);

  if (!cfg_.tracker_lowest_level_only || info.level == 0) {
    model_.tracker().update(fwd.z.topRows(info.real_rows));
  }
  if (augmenting) {
    if (!pool->initialized()) {
      pool->initialize(fwd.z.topRows(info.real_rows), step_);
    } else {
      pool->advance(fwd.z.topRows(info.real_rows), fwd.z.middleRows(info.real_rows, info.augmented_rows), step_,
                    train_rng_);
    }
  }

  info.report = fwd.report;
  ++step_;
  return info;
}

void Trainer::evaluate() {
  const LossOptions opt = eval_options(options_at(std::min(step_, cfg_.steps), 0));
  const std::uint64_t seed = splitmix64(cfg_.seed ^ static_cast<std::uint64_t>(step_));
  auto row = [&](std::string split, const LossReport& r) {
    emit(MetricRow{step_, std::move(split), r.total, r.bpc, r.kl, opt.beta, opt.tuple_sampling.p_gt, 0});
  };
  if (!test_.empty()) {
    const std::size_t n = std::min<std::size_t>(test_.size(), static_cast<std::size_t>(cfg_.eval_samples));
    row("test", evaluate_loss(model_, std::span<const Record>(test_).first(n), opt, seed));
  }
  if (model_.tracker().observed() >= model_.latent_dim()) {
    Rng rng(seed);
    const auto generated = model_.generate(cfg_.eval_samples, rng);
    row("generated", evaluate_loss(model_, generated, opt, seed));
  }
}

void Trainer::run(const std::function<void(const MetricRow&)>& on_row) {
  on_row_ = on_row;
  if (step_ == 0) evaluate();
  while (step_ < cfg_.steps) {
    const StepInfo info = train_step();
    if (step_ % cfg_.log_every == 0 || step_ == cfg_.steps) {
      emit(MetricRow{step_, "train", info.report.total, info.report.bpc, info.report.kl, info.beta, info.p_gt_tuple,
                     info.level});
    }
    if (step_ % cfg_.eval_every == 0 || step_ == cfg_.steps) evaluate();
  }
  on_row_ = {};
}

void calibrate_statistics(TreeVae& model, std::span<const Record> records, int batch_size, std::uint64_t seed) {
  if (batch_size < 2) throw std::invalid_argument("calibration batch must hold at least 2 records");
  Rng rng = derive_rng(seed, "calibrate");
  const LossOptions opt = eval_options(LossOptions{});
  for (std::size_t start = 0; start + 2 <= records.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto chunk = records.subspan(start, std::min<std::size_t>(static_cast<std::size_t>(batch_size), records.size() - start));
    if (chunk.size() < 2) break;
    model.update_statistics(chunk);
    diff::Graph g(&model.store(), false);
    const Forward f = model.loss(g, chunk, opt, rng);
    model.tracker().update(f.z);
  }
}

}  // namespace treevae::vae
