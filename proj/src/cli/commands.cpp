#include "treevae/cli/commands.hpp"

#include "treevae/checkpoint.hpp"
#include "treevae/metrics.hpp"
#include "treevae/vae/evaluation.hpp"
#include "treevae/vae/trainer.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace treevae::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  const RunConfig& cfg;
  std::string hash;
  fs::path dir;
  std::ostream& log;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

fs::path data_path(const Context& c, std::string_view key, std::string_view fallback) {
  const auto& v = c.cfg.get(key);
  return v.empty() ? c.dir / fallback : fs::path(v);
}

std::vector<Record> load(const Context& c, std::string_view key, std::string_view fallback) {
  const fs::path p = data_path(c, key, fallback);
  if (!fs::exists(p)) throw ConfigError(std::string(key) + ": no such file " + p.string());
  auto records = load_records(p, c.cfg.column_map());
  c.log << "loaded " << records.size() << " records from " << p.string() << '\n';
  return records;
}

Schema schema_of(const RunConfig& cfg) {
  const auto& path = cfg.get("data.schema");
  if (path.empty()) return parse_schema(kAddressSchemaText);
  std::ifstream in(path);
  if (!in) throw ConfigError("data.schema: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_schema(ss.str());
  } catch (const std::exception& e) {
    throw ConfigError("data.schema: " + std::string(e.what()));
  }
}

fs::path checkpoint_path(const Context& c) {
  const auto& v = c.cfg.get("eval.checkpoint");
  return v.empty() ? c.dir / "model.json" : fs::path(v);
}

vae::TreeVae load_model(const Context& c) {
  const fs::path p = checkpoint_path(c);
  if (!fs::exists(p)) throw ConfigError("missing checkpoint " + p.string());
  return vae::TreeVae::from_json(read_json_file(p));
}

json stats_json(const metrics::SummaryStats& s) {
  return {{"mean", s.mean}, {"median", s.median}, {"stddev", s.stddev}, {"count", s.count}};
}

void write_pvalues(const Context& c, const fs::path& path, const std::vector<Record>& records,
                   const std::vector<double>& p) {
  std::ostringstream os;
  os.precision(12);
  os << "# config_hash=" << c.hash << "\nindex,postcode,lat,long,pvalue\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto lat = records[i].scalar("lat"), lon = records[i].scalar("long");
    os << i << ',' << records[i].str("postcode") << ',';
    if (lat) os << *lat;
    os << ',';
    if (lon) os << *lon;
    os << ',' << p[i] << '\n';
  }
  write_text(path, os.str());
}

std::vector<Record> sample_records(const std::vector<Record>& records, std::size_t n, Rng& rng) {
  std::vector<Record> out;
  std::sample(records.begin(), records.end(), std::back_inserter(out), n, rng);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// Options of the final training step at level 0.
vae::LossOptions final_options(const vae::TrainConfig& tc) {
  const vae::MultiscaleBank bank = vae::multiscale_assign(tc);
  vae::LossOptions opt;
  opt.mode = bank.mode;
  opt.beta = bank.mode == vae::MultiscaleMode::off ? vae::beta_at(tc, tc.steps) : bank.beta(0, vae::beta_max_at(tc, tc.steps));
  opt.capacity = bank.levels.front().capacity;
  opt.gamma = bank.gamma;
  opt.skew_in_average = tc.skew_in_average;
  opt.field_weights = tc.field_weights;
  return vae::eval_options(opt);
}

json loss_json(const vae::LossReport& r) {
  json fields = json::object();
  for (const auto& f : r.fields) fields[f.name] = {{"recon", f.recon}, {"skew", f.skew}};
  return {{"loss", r.total}, {"bpc", r.bpc}, {"kl", r.kl}, {"recon", r.recon_avg}, {"rows", r.rows}, {"fields", fields}};
}

vae::TrainConfig train_config_of(const RunConfig& cfg) {
  RunConfig copy = cfg;
  // A zero-step run only writes the initialized model.
  if (cfg.get_int("train.steps") == 0) {
    copy.set("train.warmup_steps", "0");
    copy.set("train.gen_start_step", "0");
  }
  return copy.train_config();
}

int ingest(const Context& c) {
  std::vector<Record> all;
  std::size_t skipped = 0;
  const auto& input = c.cfg.get("data.input");
  if (input.empty()) throw ConfigError("data.input is required for ingest");
  if (input == "toy") {
    all = make_toy_dataset(c.cfg.get_uint("data.toy_records"), c.cfg.get_uint("data.toy_zips"),
                           c.cfg.get_uint("data.toy_seed"));
  } else {
    if (!fs::exists(input)) throw ConfigError("data.input: no such file " + input);
    auto parsed = parse_csv(fs::path(input), c.cfg.column_map());
    all = std::move(parsed.records);
    skipped = parsed.skipped;
  }
  const auto split = split_8_1_1(all, c.cfg.get_uint("data.split_seed"));
  auto emit = [&](const std::vector<Record>& r, const char* name) {
    write_jsonl(c.dir / (std::string(name) + ".jsonl"), r,
                json{{"config_hash", c.hash}, {"split", name}, {"count", r.size()}, {"split_seed", split.seed}});
    c.log << name << ": " << r.size() << " records\n";
  };
  emit(split.train, "train");
  emit(split.test, "test");
  emit(split.validation, "validation");
  c.log << "skipped " << skipped << " rows\n";
  return kExitOk;
}

int stats(const Context& c) {
  const auto train = load(c, "data.train", "train.jsonl");
  const auto table = metrics::ZipStatsTable::fit(train);
  const auto p = metrics::record_pvalues(train, table);
  const auto s = metrics::summarize(p);
  write_pvalues(c, c.dir / "self_pvalues.csv", train, p);
  write_json_file(c.dir / "stats.json", {{"config_hash", c.hash},
                                         {"records", train.size()},
                                         {"zips", table.size()},
                                         {"self_test", stats_json(s)}});
  c.log.precision(12);
  c.log << "Mean: " << s.mean << "\nMedian: " << s.median << "\nStandard deviation: " << s.stddev << '\n';
  return kExitOk;
}

int train(const Context& c) {
  const vae::TrainConfig tc = train_config_of(c.cfg);
  auto train_records = load(c, "data.train", "train.jsonl");
  std::vector<Record> test_records;
  const fs::path test_path = data_path(c, "data.test", "test.jsonl");
  if (fs::exists(test_path)) test_records = load_records(test_path, c.cfg.column_map());

  const auto mc = vae::ModelConfig::from_train(tc, schema_of(c.cfg));
  auto model = vae::TreeVae::create(mc, vae::TreeVae::build_vocabulary(mc, train_records));
  c.log << "parameters: " << model.store().scalar_count() << '\n';

  std::ofstream metrics(c.dir / "metrics.csv");
  metrics << "# config_hash=" << c.hash << '\n' << vae::kMetricsHeader << '\n';
  if (tc.steps == 0) {
    vae::calibrate_statistics(model, train_records, tc.batch_size, tc.seed);
  } else {
    vae::Trainer trainer(model, tc, std::move(train_records), std::move(test_records));
    trainer.run([&](const vae::MetricRow& r) {
      metrics << vae::to_csv(r) << '\n';
      metrics.flush();
      if (r.split != "train" || r.step % (tc.log_every * 10) == 0) {
        c.log << r.split << " step " << r.step << " loss " << r.loss << " bpc " << r.bpc << " kl " << r.kl << '\n';
      }
    });
  }
  if (!metrics) throw std::runtime_error("cannot write metrics.csv");
  json j = model.to_json();
  j["config_hash"] = c.hash;
  j["steps"] = tc.steps;
  write_json_file(c.dir / "model.json", j);
  c.log << "wrote " << (c.dir / "model.json").string() << '\n';
  return kExitOk;
}

int generate(const Context& c) {
  const auto model = load_model(c);
  Rng rng = derive_rng(c.cfg.get_uint("eval.seed"), "generate");
  const auto gen = model.generate(static_cast<int>(c.cfg.get_int("eval.samples")), rng);
  write_jsonl(c.dir / "generated.jsonl", gen, json{{"config_hash", c.hash}, {"count", gen.size()}});
  json out = {{"config_hash", c.hash}, {"count", gen.size()}};
  out["malformed"] = std::count_if(gen.begin(), gen.end(), [](const Record& r) { return r.malformed; });
  const fs::path train_path = data_path(c, "data.train", "train.jsonl");
  if (fs::exists(train_path)) {
    const auto train = load_records(train_path, c.cfg.column_map());
    const auto table = metrics::ZipStatsTable::fit(train);
    const auto p = metrics::record_pvalues(gen, table);
    write_pvalues(c, c.dir / "generated_pvalues.csv", gen, p);
    out["pvalues"] = stats_json(metrics::summarize(p));
    const auto m = metrics::membership(gen, metrics::field_values(train));
    out["street_membership"] = {{"count", m.count}, {"total", m.total}, {"proportion", m.proportion}};
  } else {
    write_pvalues(c, c.dir / "generated_pvalues.csv", {}, {});
  }
  write_json_file(c.dir / "generated_stats.json", out);
  c.log << out.dump(2) << '\n';
  return kExitOk;
}

int eval(const Context& c) {
  const auto model = load_model(c);
  const vae::TrainConfig tc = train_config_of(c.cfg);
  const auto train = load(c, "data.train", "train.jsonl");
  const std::uint64_t seed = c.cfg.get_uint("eval.seed");
  const auto n = static_cast<std::size_t>(c.cfg.get_int("eval.samples"));
  const auto opt = final_options(tc);

  json out = {{"config_hash", c.hash}, {"checkpoint", checkpoint_path(c).string()}};
  const fs::path test_path = data_path(c, "data.test", "test.jsonl");
  if (fs::exists(test_path)) {
    const auto test = load_records(test_path, c.cfg.column_map());
    out["test"] = loss_json(vae::evaluate_loss(model, test, opt, seed));
  }
  Rng gen_rng = derive_rng(seed, "generate");
  const auto gen = model.generate(static_cast<int>(n), gen_rng);
  out["generated"] = loss_json(vae::generated_loss_eval(model, gen, opt, seed));

  const auto table = metrics::ZipStatsTable::fit(train);
  out["generated"]["pvalues"] = stats_json(metrics::pvalue_stats(gen, table));
  const auto m = metrics::membership(gen, metrics::field_values(train));
  out["generated"]["street_membership"] = {{"count", m.count}, {"total", m.total}, {"proportion", m.proportion}};

  Rng pick = derive_rng(seed, "evaluate");
  const auto examples = sample_records(train, n, pick);
  const auto& field = c.cfg.get("eval.levenshtein_field");
  const auto lev = vae::reconstruction_levenshtein(model, examples, pick, field);
  out["levenshtein"] = {{"field", field}, {"mean_per_char", lev.mean_per_char}, {"count", lev.count}};
  write_json_file(c.dir / "eval.json", out);
  c.log << out.dump(2) << '\n';
  return kExitOk;
}

int repeat(const Context& c) {
  const auto model = load_model(c);
  const auto train = load(c, "data.train", "train.jsonl");
  const std::uint64_t seed = c.cfg.get_uint("eval.seed");
  const auto n = static_cast<std::size_t>(c.cfg.get_int("eval.samples"));
  const int rounds = static_cast<int>(c.cfg.get_int("eval.rounds"));
  if (rounds < 1) throw ConfigError("eval.rounds must be at least 1");
  const auto table = metrics::ZipStatsTable::fit(train);
  const auto streets = metrics::field_values(train);

  Rng rng = derive_rng(seed, "generate");
  std::vector<std::pair<std::string, std::vector<std::vector<Record>>>> sequences;
  auto generated = model.generate(static_cast<int>(n), rng);
  sequences.emplace_back("generated", vae::repeated_encode_decode(model, std::move(generated), rounds, rng));
  Rng pick = derive_rng(seed, "evaluate");
  sequences.emplace_back("reconstructed", vae::repeated_encode_decode(model, sample_records(train, n, pick), rounds, rng));

  std::ostringstream os;
  os.precision(12);
  os << "# config_hash=" << c.hash << "\nsequence,stat";
  for (int r = 0; r < rounds; ++r) os << ",round_" << r;
  os << '\n';
  for (const auto& [name, seq] : sequences) {
    std::vector<metrics::BoxStats> boxes;
    std::vector<metrics::Membership> members;
    for (const auto& round : seq) {
      boxes.push_back(metrics::box_stats(metrics::record_pvalues(round, table)));
      members.push_back(metrics::membership(round, streets));
    }
    auto line = [&](std::string_view stat, auto get) {
      os << name << ',' << stat;
      for (int r = 0; r < rounds; ++r) os << ',' << get(static_cast<std::size_t>(r));
      os << '\n';
    };
    line("min", [&](std::size_t r) { return boxes[r].min; });
    line("q1", [&](std::size_t r) { return boxes[r].q1; });
    line("median", [&](std::size_t r) { return boxes[r].median; });
    line("q3", [&](std::size_t r) { return boxes[r].q3; });
    line("max", [&](std::size_t r) { return boxes[r].max; });
    line("mean", [&](std::size_t r) { return boxes[r].mean; });
    line("street_membership", [&](std::size_t r) { return members[r].proportion; });
    line("street_count", [&](std::size_t r) { return members[r].count; });
  }
  write_text(c.dir / "repeat_boxplot.csv", os.str());
  c.log << os.str();
  return kExitOk;
}

int interpolate(const Context& c) {
  const auto model = load_model(c);
  const auto train = load(c, "data.train", "train.jsonl");
  const auto a = static_cast<std::size_t>(c.cfg.get_int("eval.interpolate_a"));
  const auto b = static_cast<std::size_t>(c.cfg.get_int("eval.interpolate_b"));
  if (a >= train.size() || b >= train.size()) throw ConfigError("interpolation endpoints outside the training set");
  Rng rng = derive_rng(c.cfg.get_uint("eval.seed"), "generate");
  const auto path = vae::interpolate(model, train[a], train[b], static_cast<int>(c.cfg.get_int("eval.interpolate_k")),
                                     rng, c.cfg.get_bool("eval.argmax"));
  json g = vae::to_geojson(path);
  g["config_hash"] = c.hash;
  g["endpoints"] = {serialize_text(train[a]), serialize_text(train[b])};
  write_json_file(c.dir / "interpolation.geojson", g);
  for (const auto& r : path.records) c.log << (r.malformed ? r.raw : serialize_text(r)) << '\n';
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"ingest", "stats", "train", "generate", "eval", "repeat", "interpolate"};
  return names;
}

std::vector<std::string> declared_outputs(std::string_view command) {
  std::vector<std::string> out{std::string(command) + ".config.ini"};
  if (command == "ingest") out.insert(out.end(), {"train.jsonl", "test.jsonl", "validation.jsonl"});
  if (command == "stats") out.insert(out.end(), {"stats.json", "self_pvalues.csv"});
  if (command == "train") out.insert(out.end(), {"metrics.csv", "model.json"});
  if (command == "generate") out.insert(out.end(), {"generated.jsonl", "generated_pvalues.csv", "generated_stats.json"});
  if (command == "eval") out.push_back("eval.json");
  if (command == "repeat") out.push_back("repeat_boxplot.csv");
  if (command == "interpolate") out.push_back("interpolation.geojson");
  return out;
}

fs::path output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("TREEVAE_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return cfg.get("output.dir");
}

int run(std::string_view command, const RunConfig& cfg, const RunOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end()) {
      throw ConfigError("unknown command '" + std::string(command) + "'");
    }
    Context c{cfg, cfg.hash(), output_dir(cfg), log};
    fs::create_directories(c.dir);
    if (!opt.force) {
      for (const auto& name : declared_outputs(command)) {
        if (fs::exists(c.dir / name)) {
          throw ConfigError((c.dir / name).string() + " exists; pass --force to overwrite");
        }
      }
    }
    const int status = command == "ingest"     ? ingest(c)
                       : command == "stats"    ? stats(c)
                       : command == "train"    ? train(c)
                       : command == "generate" ? generate(c)
                       : command == "eval"     ? eval(c)
                       : command == "repeat"   ? repeat(c)
                                               : interpolate(c);
    write_text(c.dir / (std::string(command) + ".config.ini"), "# config_hash=" + c.hash + "\n" + cfg.to_ini());
    return status;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace treevae::cli
