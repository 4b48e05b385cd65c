#pragma once

#include "treevae/nn/layers.hpp"
#include "treevae/nn/string_literal.hpp"

#include <span>
#include <vector>

namespace treevae::nn {

struct TupleDecode {
  std::vector<Var> children;                // generated child embeddings, one per element
  std::vector<Var> skew;                    // per element: sum_i weight_i * mse_i
  std::vector<std::vector<double>> skew_rows;  // per element, per row mse
};

// Non-leaf module over a fixed number of child embeddings.
// Encoder: bidirectional GRU, one distinct cell per element and direction,
// both directions starting from one trainable state. The two final states
// are merged by a 2s -> d layer.
// Decoder: state from the embedding, then element i runs its own cell on the
// previous child embedding (zeros for the first) and emits child i through
// its head.
class TupleModule {
 public:
  static TupleModule create(ParameterStore& store, std::string prefix, int arity, int dim, int state, Rng& rng);

  int arity() const { return static_cast<int>(forward_.size()); }
  int dim() const { return dim_; }

  Var encode(Graph& g, std::span<const Var> children) const;
  TupleDecode decode(Graph& g, Var embedding, std::span<const Var> truth, std::span<const double> weights,
                     Sampling sampling, Rng& rng) const;
  std::vector<Var> generate(Graph& g, Var embedding) const;

 private:
  std::string prefix_;
  int dim_ = 0;
  int state_ = 0;
  std::vector<GruCell> forward_;
  std::vector<GruCell> backward_;
  Dense merge_;
  Dense decoder_init_;
  std::vector<GruCell> decoder_;
  std::vector<Dense> heads_;
};

// Pass-through baseline: concat + dense on the way up, the embedding is
// handed unchanged to every child on the way down.
class SimpleTuple {
 public:
  static SimpleTuple create(ParameterStore& store, std::string prefix, int arity, int dim, Rng& rng);

  int arity() const { return arity_; }
  Var encode(Graph& g, std::span<const Var> children) const;
  std::vector<Var> decode(Var embedding) const { return std::vector<Var>(static_cast<std::size_t>(arity_), embedding); }

 private:
  int arity_ = 0;
  Dense merge_;
};

}  // namespace treevae::nn
