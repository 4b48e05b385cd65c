#pragma once

#include "treevae/vae/model.hpp"

#include <json.hpp>

#include <span>
#include <vector>

namespace treevae::vae {

// Evaluation view of training options: teacher forcing everywhere, the rest
// (beta, level, objective) unchanged.
LossOptions eval_options(LossOptions opt);

// The training loss path without parameter updates. Records are scored in
// chunks of 256 and the reports combined by row count.
LossReport evaluate_loss(const TreeVae& model, std::span<const Record> records, const LossOptions& opt,
                         std::uint64_t seed);

// Loss of the model's own samples as if they were data.
LossReport generated_loss_eval(const TreeVae& model, std::span<const Record> generated, const LossOptions& opt,
                               std::uint64_t seed);

// rounds[0] = input, rounds[n] = decode(mean(rounds[n - 1])).
std::vector<std::vector<Record>> repeated_encode_decode(const TreeVae& model, std::vector<Record> start, int rounds,
                                                        Rng& rng);

struct Interpolation {
  std::vector<double> lambdas;  // weight on the first endpoint, 1 -> 0
  std::vector<Record> records;
};

// Decodes lambda mu(a) + (1 - lambda) mu(b) for k equally spaced lambda.
Interpolation interpolate(const TreeVae& model, const Record& a, const Record& b, int k, Rng& rng, bool argmax = false);

// FeatureCollection of points ([long, lat]) with the decoded fields as
// properties. Records without coordinates get a null geometry.
nlohmann::json to_geojson(const Interpolation& path, std::string_view lat_field = "lat",
                          std::string_view lon_field = "long");

struct LevenshteinReport {
  double mean_per_char = 0.0;
  std::size_t count = 0;  // records with a non-empty original
};

// Reconstruction from the mean vector, edit distance per original character.
LevenshteinReport reconstruction_levenshtein(const TreeVae& model, std::span<const Record> records, Rng& rng,
                                             std::string_view field = "street");

}  // namespace treevae::vae
