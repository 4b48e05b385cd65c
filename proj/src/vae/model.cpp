#include "treevae/vae/model.hpp"

#include "treevae/checkpoint.hpp"
#include "treevae/metrics.hpp"

#include <cmath>
#include <numbers>

namespace treevae::vae {

namespace {

constexpr int kChunk = 256;

}  // namespace

ModelConfig ModelConfig::from_train(const TrainConfig& cfg, Schema schema) {
  ModelConfig m;
  m.schema = std::move(schema);
  m.variant = cfg.variant;
  m.omitted_fields = cfg.omitted_fields;
  m.latent_dim = cfg.latent_dim;
  m.state_dim = cfg.state_dim;
  m.embed_dim = cfg.embed_dim;
  m.stddev_levels = cfg.levels();
  m.max_string_length = cfg.max_string_length;
  m.tracker_decay = cfg.tracker_decay;
  m.seed = cfg.seed;
  return m;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"schema", print_schema(schema)},
          {"variant", std::string(to_string(variant))},
          {"omitted_fields", omitted_fields},
          {"latent_dim", latent_dim},
          {"state_dim", state_dim},
          {"embed_dim", embed_dim},
          {"stddev_levels", stddev_levels},
          {"max_string_length", max_string_length},
          {"tracker_decay", tracker_decay},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.schema = parse_schema(j.at("schema").get<std::string>());
  m.variant = parse_variant(j.at("variant").get<std::string>());
  m.omitted_fields = j.at("omitted_fields").get<std::vector<std::string>>();
  m.latent_dim = j.at("latent_dim").get<int>();
  m.state_dim = j.at("state_dim").get<int>();
  m.embed_dim = j.at("embed_dim").get<int>();
  m.stddev_levels = j.at("stddev_levels").get<int>();
  m.max_string_length = j.at("max_string_length").get<int>();
  m.tracker_decay = j.at("tracker_decay").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

nn::Vocabulary TreeVae::build_vocabulary(const ModelConfig& cfg, std::span<const Record> records) {
  const ModelPlan plan = compile(cfg.schema, cfg.latent_dim, cfg.variant, cfg.omitted_fields);
  std::vector<std::string> corpus;
  if (plan.variant == ModelVariant::text_concat) {
    const TextLayout layout{plan.text_fields, plan.scalar_fields, 5};
    for (const auto& r : records) corpus.push_back(serialize_text(r, layout));
  } else {
    for (const auto& child : plan.root.children) {
      if (child.kind != ModuleKind::string_literal) continue;
      for (const auto& r : records) corpus.emplace_back(r.str(child.fields[0]));
    }
  }
  return nn::Vocabulary::build(corpus);
}

TreeVae TreeVae::create(ModelConfig cfg, nn::Vocabulary vocab) {
  if (cfg.stddev_levels < 1) throw std::invalid_argument("need at least one standard deviation network");
  TreeVae m;
  m.cfg_ = std::move(cfg);
  m.plan_ = compile(m.cfg_.schema, m.cfg_.latent_dim, m.cfg_.variant, m.cfg_.omitted_fields);
  m.vocab_ = std::make_shared<const nn::Vocabulary>(std::move(vocab));
  m.layout_ = TextLayout{m.plan_.text_fields, m.plan_.scalar_fields, 5};
  Rng rng = derive_rng(m.cfg_.seed, "init");
  const int d = m.plan_.latent_dim;
  const nn::StringDims dims{m.cfg_.embed_dim, m.cfg_.state_dim, d};

  if (m.plan_.variant == ModelVariant::text_concat) {
    m.strings_.push_back(nn::StringLiteral::create(m.store_, "text", m.vocab_, dims, rng));
    m.element_module_ = {0};
  } else {
    for (const auto& child : m.plan_.root.children) {
      if (child.kind == ModuleKind::scalar_tuple) {
        m.scalars_ = nn::ScalarTuple::create(m.store_, child.module_id, static_cast<int>(child.fields.size()), d, rng);
        m.element_module_.push_back(-1);
        continue;
      }
      const bool shared = m.plan_.variant == ModelVariant::tuple;
      if (!shared || m.strings_.empty()) {
        m.strings_.push_back(nn::StringLiteral::create(m.store_, child.module_id, m.vocab_, dims, rng));
      }
      m.element_module_.push_back(shared ? 0 : static_cast<int>(m.strings_.size()) - 1);
    }
    const int arity = static_cast<int>(m.plan_.root.children.size());
    if (m.plan_.variant == ModelVariant::tuple) {
      m.tuple_ = nn::TupleModule::create(m.store_, m.plan_.root.module_id, arity, d, m.cfg_.state_dim, rng);
    } else {
      m.simple_ = nn::SimpleTuple::create(m.store_, m.plan_.root.module_id, arity, d, rng);
    }
  }
  for (int i = 0; i < m.cfg_.stddev_levels; ++i) {
    m.stddev_.push_back(nn::StdDevNetwork::create(m.store_, "stddev" + std::to_string(i), d, rng));
  }
  m.tracker_ = LatentMomentTracker(d, m.cfg_.tracker_decay);
  return m;
}

std::vector<std::string> TreeVae::element_names() const {
  if (plan_.variant == ModelVariant::text_concat) return {"text"};
  std::vector<std::string> out;
  for (const auto& c : plan_.root.children) out.push_back(c.kind == ModuleKind::scalar_tuple ? c.module_id : c.fields[0]);
  return out;
}

std::vector<std::string> TreeVae::strings_of(std::span<const Record> records, const std::string& field) const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.emplace_back(r.str(field));
  return out;
}

Matrix TreeVae::scalars_of(std::span<const Record> records) const {
  const auto& fields = plan_.scalar_fields;
  Matrix m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto v = records[i].scalar(fields[j]);
      if (!v) throw std::invalid_argument("record " + std::to_string(i) + " has no value for '" + fields[j] + "'");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  return m;
}

TreeVae::Encoded TreeVae::encode_tree(Graph& g, std::span<const Record> records) const {
  if (records.empty()) throw std::invalid_argument("cannot encode an empty batch");
  Encoded e;
  if (plan_.variant == ModelVariant::text_concat) {
    std::vector<std::string> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(serialize_text(r, layout_));
    e.mu = strings_[0].encode(g, lines);
    return e;
  }
  const auto& children = plan_.root.children;
  const auto b = static_cast<Eigen::Index>(records.size());
  e.children.resize(children.size());
  if (plan_.variant == ModelVariant::tuple) {
    // All string elements go through the shared module as one batch.
    std::vector<std::string> all;
    std::vector<std::size_t> elems;
    for (std::size_t f = 0; f < children.size(); ++f) {
      if (element_module_[f] < 0) continue;
      auto s = strings_of(records, children[f].fields[0]);
      all.insert(all.end(), s.begin(), s.end());
      elems.push_back(f);
    }
    if (!elems.empty()) {
      Var enc = strings_[0].encode(g, all);
      for (std::size_t k = 0; k < elems.size(); ++k) {
        e.children[elems[k]] = elems.size() == 1 ? enc : diff::slice_rows(enc, static_cast<Eigen::Index>(k) * b, b);
      }
    }
  } else {
    for (std::size_t f = 0; f < children.size(); ++f) {
      if (element_module_[f] < 0) continue;
      e.children[f] = strings_[static_cast<std::size_t>(element_module_[f])].encode(g, strings_of(records, children[f].fields[0]));
    }
  }
  for (std::size_t f = 0; f < children.size(); ++f) {
    if (element_module_[f] < 0) e.children[f] = scalars_->encode(g, scalars_of(records));
  }
  e.mu = tuple_ ? tuple_->encode(g, e.children) : simple_->encode(g, e.children);
  return e;
}

Var TreeVae::encode(Graph& g, std::span<const Record> records) const { return encode_tree(g, records).mu; }

Var TreeVae::stddev(Graph& g, Var mu, int level) const {
  if (level < 0 || level >= levels()) throw std::out_of_range("no standard deviation network for level " + std::to_string(level));
  return stddev_[static_cast<std::size_t>(level)].forward(g, mu);
}

TreeVae::Recon TreeVae::decode_loss(Graph& g, Var z, const Encoded& truth, std::span<const Record> records,
                                    double row_weight, const LossOptions& opt, Rng& rng) const {
  const auto names = element_names();
  const std::size_t arity = names.size();
  if (!opt.field_weights.empty() && opt.field_weights.size() != arity) {
    throw std::invalid_argument("field_weights has " + std::to_string(opt.field_weights.size()) +
                                " entries, the model has " + std::to_string(arity) + " elements");
  }
  const std::size_t b = records.size();
  auto fw = [&](std::size_t f) { return opt.field_weights.empty() ? 1.0 : opt.field_weights[f]; };
  auto recon_w = [&](std::size_t f) { return row_weight * fw(f) / static_cast<double>(arity); };
  auto skew_w = [&](std::size_t f) { return opt.skew_in_average ? recon_w(f) : row_weight * fw(f); };

  Recon out;
  out.fields.resize(arity);
  for (std::size_t f = 0; f < arity; ++f) out.fields[f].name = names[f];
  std::vector<Var> terms;
  auto mean_of = [](const std::vector<double>& v, std::size_t offset, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[offset + i];
    return s / static_cast<double>(n);
  };
  auto add_string_stats = [&](const nn::StringLoss& sl) {
    for (std::size_t i = 0; i < sl.tokens.size(); ++i) {
      out.string_nats += sl.total_nats[i];
      out.tokens += sl.tokens[i];
    }
  };

  if (plan_.variant == ModelVariant::text_concat) {
    std::vector<std::string> lines;
    for (const auto& r : records) lines.push_back(serialize_text(r, layout_));
    const std::vector<double> w(b, recon_w(0));
    const auto sl = strings_[0].decode_loss(g, z, lines, w, opt.string_sampling, rng);
    out.fields[0].recon = mean_of(sl.mean_nats, 0, b);
    add_string_stats(sl);
    out.weighted = sl.weighted;
    return out;
  }

  std::vector<Var> child_z(arity, z);
  if (tuple_) {
    const std::vector<double> ones(b, 1.0);
    auto td = tuple_->decode(g, z, truth.children, ones, opt.tuple_sampling, rng);
    for (std::size_t f = 0; f < arity; ++f) {
      terms.push_back(diff::scale(td.skew[f], skew_w(f)));
      out.fields[f].skew = mean_of(td.skew_rows[f], 0, b);
    }
    child_z = td.children;
  }

  const auto& children = plan_.root.children;
  if (tuple_) {
    std::vector<std::size_t> elems;
    std::vector<Var> embs;
    std::vector<std::string> targets;
    std::vector<double> w;
    for (std::size_t f = 0; f < arity; ++f) {
      if (element_module_[f] < 0) continue;
      elems.push_back(f);
      embs.push_back(child_z[f]);
      auto s = strings_of(records, children[f].fields[0]);
      targets.insert(targets.end(), s.begin(), s.end());
      w.insert(w.end(), b, recon_w(f));
    }
    if (!elems.empty()) {
      Var emb = embs.size() == 1 ? embs[0] : diff::concat_rows(embs);
      const auto sl = strings_[0].decode_loss(g, emb, targets, w, opt.string_sampling, rng);
      for (std::size_t k = 0; k < elems.size(); ++k) out.fields[elems[k]].recon = mean_of(sl.mean_nats, k * b, b);
      add_string_stats(sl);
      terms.push_back(sl.weighted);
    }
  } else {
    for (std::size_t f = 0; f < arity; ++f) {
      if (element_module_[f] < 0) continue;
      const std::vector<double> w(b, recon_w(f));
      const auto sl = strings_[static_cast<std::size_t>(element_module_[f])].decode_loss(
          g, child_z[f], strings_of(records, children[f].fields[0]), w, opt.string_sampling, rng);
      out.fields[f].recon = mean_of(sl.mean_nats, 0, b);
      add_string_stats(sl);
      terms.push_back(sl.weighted);
    }
  }
  for (std::size_t f = 0; f < arity; ++f) {
    if (element_module_[f] >= 0) continue;
    const std::vector<double> w(b, recon_w(f));
    const auto sq = scalars_->decode_loss(g, child_z[f], scalars_of(records), w);
    out.fields[f].recon = mean_of(sq.sq_err, 0, b);
    terms.push_back(sq.weighted);
  }
  out.weighted = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) out.weighted = diff::add(out.weighted, terms[i]);
  return out;
}

Forward TreeVae::loss(Graph& g, std::span<const Record> records, const LossOptions& opt, Rng& rng) const {
  const Encoded e = encode_tree(g, records);
  const auto b = static_cast<Eigen::Index>(records.size());
  const int d = latent_dim();
  Var sigma = stddev(g, e.mu, opt.level);
  Var z = e.mu;
  if (opt.sample_latent) z = reparameterize(g, e.mu, sigma, standard_normal(b, d, rng));
  const Recon r = decode_loss(g, z, e, records, 1.0 / static_cast<double>(b), opt, rng);
  Var kl = diff::scale(diff::sum(kl_rows(e.mu, sigma)), 1.0 / static_cast<double>(b));
  Var kl_per_dim = diff::scale(kl, 1.0 / d);

  Forward out;
  switch (opt.mode) {
    case MultiscaleMode::inverted:
      if (opt.beta <= 0.0) throw std::invalid_argument("inverted objective needs beta > 0");
      out.total = diff::add(diff::scale(r.weighted, 1.0 / opt.beta), kl_per_dim);
      break;
    case MultiscaleMode::capacity:
      if (kl_per_dim.scalar() - opt.capacity / d > 0.0) {
        out.total = diff::add(r.weighted, diff::scale(diff::add_scalar(kl_per_dim, -opt.capacity / d), opt.gamma));
      } else {
        out.total = r.weighted;
      }
      break;
    default:
      out.total = diff::add(r.weighted, diff::scale(kl_per_dim, opt.beta));
  }

  LossReport& rep = out.report;
  rep.fields = r.fields;
  rep.recon_avg = r.weighted.scalar();
  rep.kl = kl.scalar();
  rep.kl_per_dim = kl_per_dim.scalar();
  rep.beta = opt.beta;
  rep.total = out.total.scalar();
  rep.string_nats = r.string_nats;
  rep.tokens = r.tokens;
  rep.bpc = r.tokens > 0 ? r.string_nats / static_cast<double>(r.tokens) / std::numbers::ln2 : 0.0;
  rep.rows = static_cast<int>(b);
  rep.level = opt.level;
  out.mu = e.mu.value();
  out.sigma = sigma.value();
  out.z = z.value();
  return out;
}

std::vector<Record> TreeVae::decode(const Matrix& z, Rng& rng, bool argmax) const {
  if (z.cols() != latent_dim()) throw std::invalid_argument("decode: latent has the wrong width");
  const auto b = static_cast<std::size_t>(z.rows());
  std::vector<Record> out(b);
  if (b == 0) return out;
  Graph g(&store_, false);
  Var zv = g.constant(z);

  if (plan_.variant == ModelVariant::text_concat) {
    const auto lines = strings_[0].generate(g, zv, rng, 2 * cfg_.max_string_length, argmax);
    for (std::size_t i = 0; i < b; ++i) {
      auto parsed = metrics::malformed_check(lines[i], layout_);
      if (auto* rec = std::get_if<Record>(&parsed)) {
        out[i] = std::move(*rec);
      } else {
        out[i].malformed = true;
      }
      out[i].raw = lines[i];
    }
    return out;
  }

  const auto& children = plan_.root.children;
  std::vector<Var> child_z = tuple_ ? tuple_->generate(g, zv) : simple_->decode(zv);
  auto assign = [&](const std::string& field, const std::vector<std::string>& values, std::size_t offset) {
    for (std::size_t i = 0; i < b; ++i) {
      if (!values[offset + i].empty()) out[i].text[field] = values[offset + i];
    }
  };
  if (tuple_) {
    std::vector<std::size_t> elems;
    std::vector<Var> embs;
    for (std::size_t f = 0; f < children.size(); ++f) {
      if (element_module_[f] < 0) continue;
      elems.push_back(f);
      embs.push_back(child_z[f]);
    }
    if (!elems.empty()) {
      Var emb = embs.size() == 1 ? embs[0] : diff::concat_rows(embs);
      const auto s = strings_[0].generate(g, emb, rng, cfg_.max_string_length, argmax);
      for (std::size_t k = 0; k < elems.size(); ++k) assign(children[elems[k]].fields[0], s, k * b);
    }
  } else {
    for (std::size_t f = 0; f < children.size(); ++f) {
      if (element_module_[f] < 0) continue;
      const auto s = strings_[static_cast<std::size_t>(element_module_[f])].generate(g, child_z[f], rng,
                                                                                    cfg_.max_string_length, argmax);
      assign(children[f].fields[0], s, 0);
    }
  }
  for (std::size_t f = 0; f < children.size(); ++f) {
    if (element_module_[f] >= 0) continue;
    const Matrix x = scalars_->generate(g, child_z[f]);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < plan_.scalar_fields.size(); ++j) {
        out[i].scalars[plan_.scalar_fields[j]] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return out;
}

Matrix TreeVae::encode_mean(std::span<const Record> records) const {
  Matrix out(static_cast<Eigen::Index>(records.size()), latent_dim());
  for (std::size_t start = 0; start < records.size(); start += kChunk) {
    const std::size_t n = std::min<std::size_t>(kChunk, records.size() - start);
    Graph g(&store_, false);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) =
        encode(g, records.subspan(start, n)).value();
  }
  return out;
}

std::vector<Record> TreeVae::generate(int n, Rng& rng) const {
  if (n < 0) throw std::invalid_argument("generate: n must be >= 0");
  const Matrix z = tracker_.sample(n, rng);
  std::vector<Record> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int start = 0; start < n; start += kChunk) {
    const int k = std::min(kChunk, n - start);
    auto part = decode(z.middleRows(start, k), rng);
    for (auto& r : part) out.push_back(std::move(r));
  }
  return out;
}

void TreeVae::update_statistics(std::span<const Record> records) {
  if (scalars_) scalars_->whitener().update(scalars_of(records));
}

nlohmann::json TreeVae::to_json() const {
  nlohmann::json j = {{"format", "treevae-model"},
                      {"version", 1},
                      {"config", cfg_.to_json()},
                      {"vocabulary", vocab_->to_json()},
                      {"tracker", tracker_.to_json()},
                      {"parameters", store_to_json(store_)}};
  if (scalars_) j["whitener"] = scalars_->whitener().to_json();
  return j;
}

TreeVae TreeVae::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "treevae-model") throw std::runtime_error("not a treevae model checkpoint");
  TreeVae m = create(ModelConfig::from_json(j.at("config")), nn::Vocabulary::from_json(j.at("vocabulary")));
  diff::ParameterStore loaded = store_from_json(j.at("parameters"));
  for (const auto& [name, p] : m.store_.entries()) {
    if (!loaded.contains(name)) throw std::runtime_error("checkpoint lacks parameter " + name);
    const auto& v = loaded.value(name);
    if (v.rows() != p.value.rows() || v.cols() != p.value.cols()) {
      throw std::runtime_error("checkpoint parameter " + name + " has the wrong shape");
    }
  }
  if (loaded.entries().size() != m.store_.entries().size()) throw std::runtime_error("checkpoint has extra parameters");
  m.store_ = std::move(loaded);
  m.tracker_ = LatentMomentTracker::from_json(j.at("tracker"));
  if (m.scalars_) m.scalars_->whitener() = nn::Whitener::from_json(j.at("whitener"));
  return m;
}

}  // namespace treevae::vae
