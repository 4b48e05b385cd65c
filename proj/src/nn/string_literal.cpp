#include "treevae/nn/string_literal.hpp"

#include <algorithm>
#include <numeric>

namespace treevae::nn {

namespace {

struct SortedTokens {
  std::vector<std::vector<int>> tokens;
  std::vector<int> order;  // sorted position -> original index, longest first
  std::vector<int> rank;   // original index -> sorted position

  // Number of sequences with more than t tokens; they occupy the sorted prefix.
  int active(std::size_t t) const {
    int lo = 0, hi = static_cast<int>(order.size());
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (tokens[static_cast<std::size_t>(order[static_cast<std::size_t>(mid)])].size() > t) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return lo;
  }
  const std::vector<int>& at(int sorted_pos) const {
    return tokens[static_cast<std::size_t>(order[static_cast<std::size_t>(sorted_pos)])];
  }
};

SortedTokens sort_tokens(const Vocabulary& vocab, std::span<const std::string> strings) {
  SortedTokens s;
  s.tokens.reserve(strings.size());
  for (const auto& str : strings) s.tokens.push_back(vocab.encode(str));
  s.order.resize(strings.size());
  std::iota(s.order.begin(), s.order.end(), 0);
  std::stable_sort(s.order.begin(), s.order.end(), [&](int a, int b) {
    return s.tokens[static_cast<std::size_t>(a)].size() > s.tokens[static_cast<std::size_t>(b)].size();
  });
  s.rank.resize(strings.size());
  for (std::size_t k = 0; k < s.order.size(); ++k) s.rank[static_cast<std::size_t>(s.order[k])] = static_cast<int>(k);
  return s;
}

Var take_prefix(Var v, int n) { return v.rows() == n ? v : diff::slice_rows(v, 0, n); }

}  // namespace

int sample_categorical(const Eigen::Ref<const diff::RowVector>& logits, Rng& rng) {
  const double m = logits.maxCoeff();
  const diff::RowVector e = (logits.array() - m).exp().matrix();
  const double u = uniform01(rng) * e.sum();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < e.size(); ++j) {
    acc += e(j);
    if (u < acc) return static_cast<int>(j);
  }
  return static_cast<int>(e.size() - 1);
}

StringLiteral StringLiteral::create(ParameterStore& store, std::string prefix, std::shared_ptr<const Vocabulary> vocab,
                                    StringDims dims, Rng& rng) {
  StringLiteral m;
  m.prefix_ = std::move(prefix);
  m.vocab_ = std::move(vocab);
  m.dims_ = dims;
  const int v = m.vocab_->size();
  store.add(m.prefix_ + "/char_embedding", diff::init(diff::InitSpec::uniform01(), v, dims.embed, rng));
  m.encoder_ = GruCell::create(store, m.prefix_ + "/encoder", dims.embed, dims.state, rng);
  m.encoder_out_ = Dense::create(store, m.prefix_ + "/encoder_out", dims.state, dims.latent, Activation::celu, rng);
  m.decoder_init_ = Dense::create(store, m.prefix_ + "/decoder_init", dims.latent, dims.state, Activation::celu, rng);
  m.decoder_ = GruCell::create(store, m.prefix_ + "/decoder", dims.embed, dims.state, rng);
  m.softmax_ = Dense::create(store, m.prefix_ + "/softmax", dims.state, v, Activation::linear, rng);
  return m;
}

Var StringLiteral::encode(Graph& g, std::span<const std::string> strings) const {
  if (strings.empty()) throw std::invalid_argument("string encode of an empty batch");
  const SortedTokens st = sort_tokens(*vocab_, strings);
  const int n = static_cast<int>(strings.size());
  Var table = g.param(prefix_ + "/char_embedding");
  Var h = g.constant(Matrix::Zero(n, dims_.state));
  std::vector<Var> finished;
  const std::size_t steps = st.at(0).size();
  int active = n;
  std::vector<int> ids;
  for (std::size_t t = 0; t < steps; ++t) {
    ids.resize(static_cast<std::size_t>(active));
    for (int k = 0; k < active; ++k) ids[static_cast<std::size_t>(k)] = st.at(k)[t];
    h = encoder_.step(g, diff::gather_rows(table, ids), take_prefix(h, active));
    const int next = st.active(t + 1);
    if (next < active) finished.push_back(next == 0 ? h : diff::slice_rows(h, next, active - next));
    active = next;
  }
  std::reverse(finished.begin(), finished.end());
  Var final_sorted = finished.size() == 1 ? finished[0] : diff::concat_rows(finished);
  return encoder_out_.forward(g, diff::gather_rows(final_sorted, st.rank));
}

StringLoss StringLiteral::decode_loss(Graph& g, Var embeddings, std::span<const std::string> targets,
                                      std::span<const double> weights, Sampling sampling, Rng& rng) const {
  const int n = static_cast<int>(targets.size());
  if (n == 0 || embeddings.rows() != n || static_cast<int>(weights.size()) != n) {
    throw std::invalid_argument("string decode: embeddings/targets/weights size mismatch");
  }
  const SortedTokens st = sort_tokens(*vocab_, targets);
  Var table = g.param(prefix_ + "/char_embedding");
  Var h = diff::gather_rows(decoder_init_.forward(g, embeddings), st.order);

  StringLoss out;
  out.total_nats.assign(static_cast<std::size_t>(n), 0.0);
  out.mean_nats.assign(static_cast<std::size_t>(n), 0.0);
  out.tokens.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.tokens[static_cast<std::size_t>(i)] = static_cast<int>(st.tokens[static_cast<std::size_t>(i)].size());

  std::vector<int> tgt, inputs;
  std::vector<double> w;
  std::vector<double> nats;
  const std::size_t steps = st.at(0).size();
  int active = n;
  for (std::size_t t = 0; t < steps; ++t) {
    Var hp = take_prefix(h, active);
    Var logits = softmax_.forward(g, hp);
    tgt.resize(static_cast<std::size_t>(active));
    w.resize(static_cast<std::size_t>(active));
    for (int k = 0; k < active; ++k) {
      const auto& toks = st.at(k);
      const int orig = st.order[static_cast<std::size_t>(k)];
      tgt[static_cast<std::size_t>(k)] = toks[t];
      w[static_cast<std::size_t>(k)] = weights[static_cast<std::size_t>(orig)] / static_cast<double>(toks.size());
    }
    Var ce = diff::softmax_cross_entropy(logits, tgt, w, &nats);
    for (int k = 0; k < active; ++k) out.total_nats[static_cast<std::size_t>(st.order[static_cast<std::size_t>(k)])] += nats[static_cast<std::size_t>(k)];
    out.weighted = out.weighted.valid() ? diff::add(out.weighted, ce) : ce;

    const int next = st.active(t + 1);
    if (next == 0) break;
    inputs.resize(static_cast<std::size_t>(next));
    for (int k = 0; k < next; ++k) {
      inputs[static_cast<std::size_t>(k)] =
          sampling.use_ground_truth(rng) ? st.at(k)[t] : sample_categorical(logits.value().row(k), rng);
    }
    h = decoder_.step(g, diff::gather_rows(table, inputs), take_prefix(hp, next));
    active = next;
  }
  for (int i = 0; i < n; ++i) {
    out.mean_nats[static_cast<std::size_t>(i)] = out.total_nats[static_cast<std::size_t>(i)] / out.tokens[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<std::string> StringLiteral::generate(Graph& g, Var embeddings, Rng& rng, int max_len, bool argmax) const {
  if (max_len <= 0) throw std::invalid_argument("generate needs max_len > 0");
  const int n = static_cast<int>(embeddings.rows());
  std::vector<std::string> out(static_cast<std::size_t>(n));
  Var table = g.param(prefix_ + "/char_embedding");
  Var h = decoder_init_.forward(g, embeddings);
  std::vector<int> active(static_cast<std::size_t>(n));
  std::iota(active.begin(), active.end(), 0);
  std::vector<int> keep, ids, next;
  while (!active.empty()) {
    Var logits = softmax_.forward(g, h);
    keep.clear();
    ids.clear();
    next.clear();
    for (std::size_t k = 0; k < active.size(); ++k) {
      const auto row = logits.value().row(static_cast<Eigen::Index>(k));
      int id = 0;
      if (argmax) {
        row.maxCoeff(&id);
      } else {
        id = sample_categorical(row, rng);
      }
      if (id == vocab_->eos()) continue;
      std::string& s = out[static_cast<std::size_t>(active[k])];
      s.push_back(vocab_->byte(id));
      if (static_cast<int>(s.size()) >= max_len) continue;
      keep.push_back(static_cast<int>(k));
      ids.push_back(id);
      next.push_back(active[k]);
    }
    if (keep.empty()) break;
    h = decoder_.step(g, diff::gather_rows(table, ids), diff::gather_rows(h, keep));
    active.swap(next);
  }
  return out;
}

}  // namespace treevae::nn
