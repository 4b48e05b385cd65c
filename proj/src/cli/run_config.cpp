#include "treevae/cli/run_config.hpp"

#include "treevae/rng.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace treevae::cli {

namespace {

[[noreturn]] void bad_value(std::string_view key, const std::string& value, std::string_view want) {
  throw ConfigError("config key " + std::string(key) + ": expected " + std::string(want) + ", got '" + value + "'");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

const std::vector<RunConfig::Key>& RunConfig::keys() {
  static const std::vector<Key> k = {
      {"data.input", "", "raw CSV for ingest, or 'toy' for the synthetic dataset"},
      {"data.train", "", "training records (.jsonl or CSV)"},
      {"data.test", "", "test records (.jsonl or CSV)"},
      {"data.columns", "openaddresses", "column map: 'openaddresses' or field=COLUMN,..."},
      {"data.schema", "", "schema file; empty uses the built-in address message"},
      {"data.split_seed", "0", "seed of the 8:1:1 split done by ingest"},
      {"data.toy_records", "1000", "records of the synthetic dataset"},
      {"data.toy_zips", "10", "zip codes of the synthetic dataset"},
      {"data.toy_seed", "7", "seed of the synthetic dataset"},
      {"model.variant", "tuple", "tuple | pass_through | text_concat"},
      {"model.omitted_fields", "", "string fields left out (pass_through, text_concat)"},
      {"model.latent_dim", "128", "latent dimension"},
      {"model.state_dim", "128", "recurrent state dimension"},
      {"model.embed_dim", "16", "character embedding dimension"},
      {"model.max_string_length", "64", "generation cap per string field"},
      {"model.tracker_decay", "0.999", "decay of the latent moment tracker"},
      {"train.steps", "2000000", "optimizer steps"},
      {"train.batch_size", "256", "real records per batch"},
      {"train.seed", "1", "run seed"},
      {"train.beta_start", "0", "KL weight at step 0"},
      {"train.beta_mid", "0.384", "KL weight at the end of the warm-up"},
      {"train.beta_end", "0.384", "KL weight at the last step"},
      {"train.warmup_steps", "1000000", "warm-up length"},
      {"train.tuple_sampling", "ss", "tuple decoder inputs: tf | as | ss"},
      {"train.string_sampling", "tf", "string decoder inputs: tf | as | ss"},
      {"train.n_augmented", "0", "augmented latent vectors, 0 disables augmented training"},
      {"train.p_sampled", "0.2", "restart probability of a pool entry"},
      {"train.gen_start_step", "0", "first step of augmented training"},
      {"train.multiscale", "off", "off | linear | geometric | inverted | capacity"},
      {"train.n_kl_weight", "32", "multiscale levels"},
      {"train.geometric_ratio", "0.9", "ratio of geometric beta spacing"},
      {"train.beta_max_start", "0", "largest level beta at step 0"},
      {"train.beta_max_end", "0.64", "largest level beta after the warm-up"},
      {"train.capacity_min", "10", "capacity of level 0 in nats"},
      {"train.capacity_increment", "0.5", "capacity step between levels"},
      {"train.capacity_gamma", "128", "capacity penalty weight"},
      {"train.p_spacing", "constant", "per-level p_sampled: constant | linear | geometric"},
      {"train.p_min", "0.2", "p_sampled of level 0"},
      {"train.p_max", "0.2", "p_sampled of the last level"},
      {"train.learning_rate", "0.00025", "Adam learning rate"},
      {"train.decay_rate", "0.99", "learning rate decay factor"},
      {"train.decay_steps", "1000", "steps per decay factor"},
      {"train.adam_beta1", "0.9", "Adam first moment decay"},
      {"train.adam_beta2", "0.999", "Adam second moment decay"},
      {"train.adam_epsilon", "1e-08", "Adam epsilon"},
      {"train.clip_norm", "0.01", "global gradient norm cap"},
      {"train.tracker_lowest_level_only", "false", "feed the latent tracker from level 0 only"},
      {"train.skew_in_average", "true", "skew loss inside the per-field average"},
      {"train.field_weights", "", "per tuple element, comma separated; empty means 1"},
      {"train.log_every", "100", "steps between train rows of the metrics log"},
      {"train.eval_every", "1000", "steps between test/generated rows"},
      {"train.eval_samples", "256", "records per test/generated evaluation"},
      {"eval.checkpoint", "", "model checkpoint; empty uses <output>/model.json"},
      {"eval.samples", "10000", "generated samples and training examples per evaluation"},
      {"eval.rounds", "10", "repeated encode/decode rounds including round 0"},
      {"eval.interpolate_k", "20", "interpolation points"},
      {"eval.interpolate_a", "0", "training index of the first endpoint"},
      {"eval.interpolate_b", "1", "training index of the second endpoint"},
      {"eval.levenshtein_field", "street", "field scored by the Levenshtein metric"},
      {"eval.seed", "1", "evaluation seed"},
      {"eval.argmax", "false", "argmax decoding for interpolation"},
      {"output.dir", "out", "output directory (TREEVAE_OUTPUT_DIR overrides)"},
  };
  return k;
}

RunConfig::RunConfig() {
  for (const auto& k : keys()) values_[k.name] = k.default_value;
}

RunConfig RunConfig::from_string(std::string_view ini) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(ini)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' must live in a section");
    for (const auto& [key, value] : body) cfg.set(section + "." + key, value.get_value<std::string>());
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw ConfigError("cannot read config file " + path.string());
  std::string text;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) text.append(buf, n);
  std::fclose(f);
  return from_string(text);
}

void RunConfig::set(std::string_view key, std::string value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second = trim(value);
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set(trim(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::logic_error("no config key " + std::string(key));
  return it->second;
}

long long RunConfig::get_int(std::string_view key) const {
  const auto& v = get(key);
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t RunConfig::get_uint(std::string_view key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double RunConfig::get_double(std::string_view key) const {
  const auto& v = get(key);
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a number");
  return out;
}

bool RunConfig::get_bool(std::string_view key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> RunConfig::get_list(std::string_view key) const {
  std::vector<std::string> out;
  const auto& v = get(key);
  std::size_t start = 0;
  while (start <= v.size() && !v.empty()) {
    const auto comma = v.find(',', start);
    const auto item = trim(std::string_view(v).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> RunConfig::get_double_list(std::string_view key) const {
  std::vector<double> out;
  for (const auto& item : get_list(key)) {
    double d = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), d);
    if (ec != std::errc{} || p != item.data() + item.size()) bad_value(key, get(key), "a list of numbers");
    out.push_back(d);
  }
  return out;
}

vae::TrainConfig RunConfig::train_config() const {
  vae::TrainConfig c;
  c.steps = get_int("train.steps");
  c.batch_size = static_cast<int>(get_int("train.batch_size"));
  c.seed = get_uint("train.seed");
  try {
    c.variant = parse_variant(get("model.variant"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.omitted_fields = get_list("model.omitted_fields");
  c.latent_dim = static_cast<int>(get_int("model.latent_dim"));
  c.state_dim = static_cast<int>(get_int("model.state_dim"));
  c.embed_dim = static_cast<int>(get_int("model.embed_dim"));
  c.max_string_length = static_cast<int>(get_int("model.max_string_length"));
  c.tracker_decay = get_double("model.tracker_decay");
  c.beta_start = get_double("train.beta_start");
  c.beta_mid = get_double("train.beta_mid");
  c.beta_end = get_double("train.beta_end");
  c.warmup_steps = get_int("train.warmup_steps");
  c.tuple_sampling = vae::parse_sampling_mode(get("train.tuple_sampling"));
  c.string_sampling = vae::parse_sampling_mode(get("train.string_sampling"));
  c.n_augmented = static_cast<int>(get_int("train.n_augmented"));
  c.p_sampled = get_double("train.p_sampled");
  c.gen_start_step = get_int("train.gen_start_step");
  c.multiscale = vae::parse_multiscale_mode(get("train.multiscale"));
  c.n_kl_weight = static_cast<int>(get_int("train.n_kl_weight"));
  c.geometric_ratio = get_double("train.geometric_ratio");
  c.beta_max_start = get_double("train.beta_max_start");
  c.beta_max_end = get_double("train.beta_max_end");
  c.capacity_min = get_double("train.capacity_min");
  c.capacity_increment = get_double("train.capacity_increment");
  c.capacity_gamma = get_double("train.capacity_gamma");
  c.p_spacing = vae::parse_p_spacing(get("train.p_spacing"));
  c.p_min = get_double("train.p_min");
  c.p_max = get_double("train.p_max");
  c.adam.learning_rate = get_double("train.learning_rate");
  c.adam.decay_rate = get_double("train.decay_rate");
  c.adam.decay_steps = get_double("train.decay_steps");
  c.adam.beta1 = get_double("train.adam_beta1");
  c.adam.beta2 = get_double("train.adam_beta2");
  c.adam.epsilon = get_double("train.adam_epsilon");
  c.clip_norm = get_double("train.clip_norm");
  c.tracker_lowest_level_only = get_bool("train.tracker_lowest_level_only");
  c.skew_in_average = get_bool("train.skew_in_average");
  c.field_weights = get_double_list("train.field_weights");
  c.log_every = get_int("train.log_every");
  c.eval_every = get_int("train.eval_every");
  c.eval_samples = static_cast<int>(get_int("train.eval_samples"));
  c.validate();
  return c;
}

ColumnMap RunConfig::column_map() const {
  const auto& spec = get("data.columns");
  if (spec == "openaddresses") return ColumnMap::openaddresses();
  try {
    return ColumnMap::parse(spec, {"lat", "long"});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("data.columns: ") + e.what());
  }
}

std::string RunConfig::to_ini() const {
  std::ostringstream out;
  std::string section;
  for (const auto& k : keys()) {
    const auto dot = k.name.find('.');
    const std::string sec = k.name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << k.name.substr(dot + 1) << " = " << get(k.name) << '\n';
  }
  return out.str();
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_ini())));
  return buf;
}

}  // namespace treevae::cli
