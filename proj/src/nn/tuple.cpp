#include "treevae/nn/tuple.hpp"

namespace treevae::nn {

TupleModule TupleModule::create(ParameterStore& store, std::string prefix, int arity, int dim, int state, Rng& rng) {
  if (arity <= 0) throw std::invalid_argument("tuple needs at least one element");
  TupleModule t;
  t.prefix_ = std::move(prefix);
  t.dim_ = dim;
  t.state_ = state;
  store.add(t.prefix_ + "/initial_state", diff::init(diff::InitSpec::zeros(), 1, state, rng));
  for (int i = 0; i < arity; ++i) {
    const std::string e = std::to_string(i);
    t.forward_.push_back(GruCell::create(store, t.prefix_ + "/encoder_fw" + e, dim, state, rng));
    t.backward_.push_back(GruCell::create(store, t.prefix_ + "/encoder_bw" + e, dim, state, rng));
  }
  t.merge_ = Dense::create(store, t.prefix_ + "/merge", 2 * state, dim, Activation::celu, rng);
  t.decoder_init_ = Dense::create(store, t.prefix_ + "/decoder_init", dim, state, Activation::celu, rng);
  for (int i = 0; i < arity; ++i) {
    const std::string e = std::to_string(i);
    t.decoder_.push_back(GruCell::create(store, t.prefix_ + "/decoder" + e, dim, state, rng));
    t.heads_.push_back(Dense::create(store, t.prefix_ + "/head" + e, state, dim, Activation::celu, rng));
  }
  return t;
}

Var TupleModule::encode(Graph& g, std::span<const Var> children) const {
  if (static_cast<int>(children.size()) != arity()) {
    throw std::invalid_argument(prefix_ + ": expected " + std::to_string(arity()) + " children, got " +
                                std::to_string(children.size()));
  }
  const Eigen::Index rows = children[0].rows();
  Var h0 = broadcast_rows(g, g.param(prefix_ + "/initial_state"), rows);
  Var fw = h0;
  for (int i = 0; i < arity(); ++i) fw = forward_[static_cast<std::size_t>(i)].step(g, children[static_cast<std::size_t>(i)], fw);
  Var bw = h0;
  for (int i = arity() - 1; i >= 0; --i) bw = backward_[static_cast<std::size_t>(i)].step(g, children[static_cast<std::size_t>(i)], bw);
  return merge_.forward(g, diff::concat_cols(fw, bw));
}

TupleDecode TupleModule::decode(Graph& g, Var embedding, std::span<const Var> truth, std::span<const double> weights,
                                Sampling sampling, Rng& rng) const {
  if (static_cast<int>(truth.size()) != arity()) throw std::invalid_argument(prefix_ + ": wrong number of targets");
  const Eigen::Index rows = embedding.rows();
  if (static_cast<Eigen::Index>(weights.size()) != rows) throw std::invalid_argument(prefix_ + ": weight count mismatch");
  Matrix w(rows, 1);
  for (Eigen::Index r = 0; r < rows; ++r) w(r, 0) = weights[static_cast<std::size_t>(r)] / dim_;
  Var wv = g.constant(std::move(w));

  TupleDecode out;
  Var h = decoder_init_.forward(g, embedding);
  Var x = g.constant(Matrix::Zero(rows, dim_));
  std::vector<char> take_truth(static_cast<std::size_t>(rows));
  for (int i = 0; i < arity(); ++i) {
    const auto e = static_cast<std::size_t>(i);
    h = decoder_[e].step(g, x, h);
    Var gen = heads_[e].forward(g, h);
    Var sq = diff::row_sum(diff::square(diff::sub(gen, truth[e])));
    std::vector<double> mse(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) mse[static_cast<std::size_t>(r)] = sq.value()(r, 0) / dim_;
    out.skew.push_back(diff::sum(diff::mul(sq, wv)));
    out.skew_rows.push_back(std::move(mse));
    out.children.push_back(gen);
    if (i + 1 == arity()) break;
    bool any_truth = false, any_sampled = false;
    for (auto& t : take_truth) {
      t = sampling.use_ground_truth(rng) ? 1 : 0;
      (t ? any_truth : any_sampled) = true;
    }
    if (!any_sampled) {
      x = truth[e];
    } else if (!any_truth) {
      x = gen;
    } else {
      x = diff::select_rows(take_truth, truth[e], gen);
    }
  }
  return out;
}

std::vector<Var> TupleModule::generate(Graph& g, Var embedding) const {
  std::vector<Var> out;
  Var h = decoder_init_.forward(g, embedding);
  Var x = g.constant(Matrix::Zero(embedding.rows(), dim_));
  for (int i = 0; i < arity(); ++i) {
    const auto e = static_cast<std::size_t>(i);
    h = decoder_[e].step(g, x, h);
    x = heads_[e].forward(g, h);
    out.push_back(x);
  }
  return out;
}

SimpleTuple SimpleTuple::create(ParameterStore& store, std::string prefix, int arity, int dim, Rng& rng) {
  if (arity <= 0) throw std::invalid_argument("tuple needs at least one element");
  SimpleTuple t;
  t.arity_ = arity;
  t.merge_ = Dense::create(store, prefix + "/merge", arity * dim, dim, Activation::celu, rng);
  return t;
}

Var SimpleTuple::encode(Graph& g, std::span<const Var> children) const {
  if (static_cast<int>(children.size()) != arity_) throw std::invalid_argument("simple tuple: wrong number of children");
  Var cat = children[0];
  for (std::size_t i = 1; i < children.size(); ++i) cat = diff::concat_cols(cat, children[i]);
  return merge_.forward(g, cat);
}

}  // namespace treevae::nn
