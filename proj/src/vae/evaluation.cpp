#include "treevae/vae/evaluation.hpp"

#include "treevae/metrics.hpp"

#include <numbers>

namespace treevae::vae {

namespace {

constexpr std::size_t kChunk = 256;

}  // namespace

LossOptions eval_options(LossOptions opt) {
  opt.tuple_sampling = nn::Sampling::teacher_forcing();
  opt.string_sampling = nn::Sampling::teacher_forcing();
  return opt;
}

LossReport evaluate_loss(const TreeVae& model, std::span<const Record> records, const LossOptions& opt,
                         std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("evaluate_loss needs at least one record");
  Rng rng = derive_rng(seed, "evaluate");
  LossReport total;
  for (std::size_t start = 0; start < records.size(); start += kChunk) {
    const auto chunk = records.subspan(start, std::min(kChunk, records.size() - start));
    diff::Graph g(&model.store(), false);
    const LossReport r = model.loss(g, chunk, opt, rng).report;
    if (start == 0) {
      total = r;
      continue;
    }
    const double a = static_cast<double>(total.rows), b = static_cast<double>(r.rows), n = a + b;
    auto blend = [&](double x, double y) { return (a * x + b * y) / n; };
    for (std::size_t f = 0; f < total.fields.size(); ++f) {
      total.fields[f].recon = blend(total.fields[f].recon, r.fields[f].recon);
      total.fields[f].skew = blend(total.fields[f].skew, r.fields[f].skew);
    }
    total.recon_avg = blend(total.recon_avg, r.recon_avg);
    total.kl = blend(total.kl, r.kl);
    total.kl_per_dim = blend(total.kl_per_dim, r.kl_per_dim);
    total.total = blend(total.total, r.total);
    total.string_nats += r.string_nats;
    total.tokens += r.tokens;
    total.rows += r.rows;
  }
  total.bpc = total.tokens > 0 ? total.string_nats / static_cast<double>(total.tokens) / std::numbers::ln2 : 0.0;
  return total;
}

LossReport generated_loss_eval(const TreeVae& model, std::span<const Record> generated, const LossOptions& opt,
                               std::uint64_t seed) {
  return evaluate_loss(model, generated, opt, seed);
}

std::vector<std::vector<Record>> repeated_encode_decode(const TreeVae& model, std::vector<Record> start, int rounds,
                                                        Rng& rng) {
  if (rounds < 1) throw std::invalid_argument("repeated encode/decode needs at least one round");
  std::vector<std::vector<Record>> out;
  out.reserve(static_cast<std::size_t>(rounds));
  out.push_back(std::move(start));
  for (int n = 1; n < rounds; ++n) {
    const auto& prev = out.back();
    std::vector<Record> next;
    next.reserve(prev.size());
    for (std::size_t s = 0; s < prev.size(); s += kChunk) {
      const auto chunk = std::span<const Record>(prev).subspan(s, std::min(kChunk, prev.size() - s));
      for (auto& r : model.decode(model.encode_mean(chunk), rng)) next.push_back(std::move(r));
    }
    out.push_back(std::move(next));
  }
  return out;
}

Interpolation interpolate(const TreeVae& model, const Record& a, const Record& b, int k, Rng& rng, bool argmax) {
  if (k < 2) throw std::invalid_argument("interpolation needs k >= 2");
  const std::vector<Record> ends{a, b};
  const Matrix mu = model.encode_mean(ends);
  Interpolation out;
  Matrix z(k, mu.cols());
  for (int i = 0; i < k; ++i) {
    const double lambda = 1.0 - static_cast<double>(i) / (k - 1);
    out.lambdas.push_back(lambda);
    z.row(i) = lambda * mu.row(0) + (1.0 - lambda) * mu.row(1);
  }
  out.records = model.decode(z, rng, argmax);
  return out;
}

nlohmann::json to_geojson(const Interpolation& path, std::string_view lat_field, std::string_view lon_field) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < path.records.size(); ++i) {
    const Record& r = path.records[i];
    nlohmann::json props = {{"index", i}, {"lambda", path.lambdas.at(i)}};
    for (const auto& [k, v] : r.text) props[k] = v;
    if (r.malformed) props["malformed"] = true;
    if (!r.raw.empty()) props["raw"] = r.raw;
    nlohmann::json geometry = nullptr;
    const auto lat = r.scalar(lat_field), lon = r.scalar(lon_field);
    if (lat && lon) geometry = {{"type", "Point"}, {"coordinates", {*lon, *lat}}};
    features.push_back({{"type", "Feature"}, {"geometry", geometry}, {"properties", props}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

LevenshteinReport reconstruction_levenshtein(const TreeVae& model, std::span<const Record> records, Rng& rng,
                                             std::string_view field) {
  LevenshteinReport rep;
  double sum = 0.0;
  for (std::size_t s = 0; s < records.size(); s += kChunk) {
    const auto chunk = records.subspan(s, std::min(kChunk, records.size() - s));
    const auto recon = model.decode(model.encode_mean(chunk), rng);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const auto d = metrics::levenshtein_per_char(chunk[i].str(field), recon[i].str(field));
      if (!d) continue;
      sum += *d;
      ++rep.count;
    }
  }
  rep.mean_per_char = rep.count == 0 ? 0.0 : sum / static_cast<double>(rep.count);
  return rep;
}

}  // namespace treevae::vae
