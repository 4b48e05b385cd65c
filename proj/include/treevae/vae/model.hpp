#pragma once

#include "treevae/data.hpp"
#include "treevae/nn/scalar_tuple.hpp"
#include "treevae/nn/string_literal.hpp"
#include "treevae/nn/tuple.hpp"
#include "treevae/record.hpp"
#include "treevae/schema.hpp"
#include "treevae/vae/config.hpp"
#include "treevae/vae/latent.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace treevae::vae {

struct ModelConfig {
  Schema schema;
  ModelVariant variant = ModelVariant::tuple;
  std::vector<std::string> omitted_fields;
  int latent_dim = 128;  // the text variant doubles it
  int state_dim = 128;
  int embed_dim = 16;
  int stddev_levels = 1;
  int max_string_length = 64;
  double tracker_decay = 0.999;
  std::uint64_t seed = 1;

  static ModelConfig from_train(const TrainConfig& cfg, Schema schema);
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct FieldLoss {
  std::string name;   // field name, or "scalars"
  double recon = 0.0;  // nats per token for strings, summed squared error for scalars
  double skew = 0.0;
};

struct LossReport {
  std::vector<FieldLoss> fields;
  double recon_avg = 0.0;
  double kl = 0.0;  // nats per record
  double kl_per_dim = 0.0;
  double beta = 0.0;
  double total = 0.0;
  double bpc = 0.0;
  double string_nats = 0.0;
  std::int64_t tokens = 0;
  int rows = 0;
  int level = 0;
};

struct LossOptions {
  double beta = 0.0;
  int level = 0;
  MultiscaleMode mode = MultiscaleMode::off;
  double capacity = 0.0;
  double gamma = 128.0;
  nn::Sampling tuple_sampling = nn::Sampling::teacher_forcing();
  nn::Sampling string_sampling = nn::Sampling::teacher_forcing();
  // false decodes from the mean vector.
  bool sample_latent = true;
  bool skew_in_average = true;
  std::vector<double> field_weights;
};

struct Forward {
  Var total;
  LossReport report;
  Matrix mu;
  Matrix sigma;
  Matrix z;
};

// A compiled model plan bound to parameters, plus the moving statistics it
// carries (scalar whitening, latent moments for generation).
class TreeVae {
 public:
  static TreeVae create(ModelConfig cfg, nn::Vocabulary vocab);
  // Vocabulary over what the model's string modules will read.
  static nn::Vocabulary build_vocabulary(const ModelConfig& cfg, std::span<const Record> records);

  const ModelConfig& config() const { return cfg_; }
  const ModelPlan& plan() const { return plan_; }
  int latent_dim() const { return plan_.latent_dim; }
  int levels() const { return static_cast<int>(stddev_.size()); }
  const nn::Vocabulary& vocab() const { return *vocab_; }
  diff::ParameterStore& store() { return store_; }
  const diff::ParameterStore& store() const { return store_; }
  LatentMomentTracker& tracker() { return tracker_; }
  const LatentMomentTracker& tracker() const { return tracker_; }
  const nn::Whitener* whitener() const { return scalars_ ? &scalars_->whitener() : nullptr; }
  const nn::StdDevNetwork& stddev_network(int level) const { return stddev_.at(static_cast<std::size_t>(level)); }
  const TextLayout& text_layout() const { return layout_; }
  // Tuple element names in plan order.
  std::vector<std::string> element_names() const;

  Var encode(Graph& g, std::span<const Record> records) const;
  Var stddev(Graph& g, Var mu, int level) const;
  Forward loss(Graph& g, std::span<const Record> records, const LossOptions& opt, Rng& rng) const;

  std::vector<Record> decode(const Matrix& z, Rng& rng, bool argmax = false) const;
  Matrix encode_mean(std::span<const Record> records) const;
  // Latents from the moment tracker, decoded.
  std::vector<Record> generate(int n, Rng& rng) const;

  // Moving scalar statistics; training only.
  void update_statistics(std::span<const Record> records);

  nlohmann::json to_json() const;
  static TreeVae from_json(const nlohmann::json& j);

 private:
  struct Encoded {
    Var mu;
    std::vector<Var> children;
  };
  struct Recon {
    Var weighted;  // sum_r w_r * recon_avg_r
    std::vector<FieldLoss> fields;
    double string_nats = 0.0;
    std::int64_t tokens = 0;
  };

  Encoded encode_tree(Graph& g, std::span<const Record> records) const;
  Recon decode_loss(Graph& g, Var z, const Encoded& truth, std::span<const Record> records, double row_weight,
                    const LossOptions& opt, Rng& rng) const;
  std::vector<std::string> strings_of(std::span<const Record> records, const std::string& field) const;
  Matrix scalars_of(std::span<const Record> records) const;

  ModelConfig cfg_;
  ModelPlan plan_;
  std::shared_ptr<const nn::Vocabulary> vocab_;
  diff::ParameterStore store_;
  TextLayout layout_;

  // tuple variant: one shared string module; pass-through: one per field;
  // text variant: one over the serialized record.
  std::vector<nn::StringLiteral> strings_;
  std::vector<int> element_module_;  // element -> index in strings_, -1 for the scalar element
  std::optional<nn::ScalarTuple> scalars_;
  std::optional<nn::TupleModule> tuple_;
  std::optional<nn::SimpleTuple> simple_;
  std::vector<nn::StdDevNetwork> stddev_;
  LatentMomentTracker tracker_;
};

}  // namespace treevae::vae
