#pragma once

#include "treevae/nn/layers.hpp"
#include "treevae/nn/vocabulary.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace treevae::nn {

// Probability that a recurrent decoder consumes the ground truth at a step
// rather than its own output. One Bernoulli draw per row and step.
struct Sampling {
  double p_gt = 1.0;

  static Sampling teacher_forcing() { return {1.0}; }
  static Sampling always_sampling() { return {0.0}; }
  static Sampling scheduled(double p) { return {p}; }

  bool use_ground_truth(Rng& rng) const {
    if (p_gt >= 1.0) return true;
    if (p_gt <= 0.0) return false;
    return uniform01(rng) < p_gt;
  }
};

struct StringDims {
  int embed = 16;
  int state = 128;
  int latent = 128;
};

struct StringLoss {
  Var weighted;                    // sum_i weight_i * mean_nats_i
  std::vector<double> mean_nats;   // per string, over its tokens
  std::vector<double> total_nats;  // per string
  std::vector<int> tokens;         // characters + EOS
};

// Character-level seq-to-seq module. The encoder reads the characters and
// then EOS from a zero state; the decoder starts from a projection of the
// embedding and predicts token t from the state before consuming it.
class StringLiteral {
 public:
  static StringLiteral create(ParameterStore& store, std::string prefix, std::shared_ptr<const Vocabulary> vocab,
                              StringDims dims, Rng& rng);

  // strings.size() x latent.
  Var encode(Graph& g, std::span<const std::string> strings) const;

  StringLoss decode_loss(Graph& g, Var embeddings, std::span<const std::string> targets,
                         std::span<const double> weights, Sampling sampling, Rng& rng) const;

  std::vector<std::string> generate(Graph& g, Var embeddings, Rng& rng, int max_len, bool argmax = false) const;

  const Vocabulary& vocab() const { return *vocab_; }
  const StringDims& dims() const { return dims_; }
  const std::string& prefix() const { return prefix_; }
  // Number of encoder recurrences for s.
  std::size_t encode_steps(std::string_view s) const { return vocab_->encode(s).size(); }

 private:
  std::string prefix_;
  std::shared_ptr<const Vocabulary> vocab_;
  StringDims dims_;
  GruCell encoder_;
  Dense encoder_out_;
  Dense decoder_init_;
  GruCell decoder_;
  Dense softmax_;
};

int sample_categorical(const Eigen::Ref<const diff::RowVector>& logits, Rng& rng);

}  // namespace treevae::nn
