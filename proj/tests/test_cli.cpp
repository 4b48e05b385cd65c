#include "treevae/cli/commands.hpp"
#include "treevae/cli/run_config.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace treevae;
using namespace treevae::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

RunConfig small_config(const fs::path& dir) {
  RunConfig c = RunConfig::from_string(R"(
[data]
input = toy
toy_records = 300
toy_zips = 5
[model]
latent_dim = 8
state_dim = 8
embed_dim = 4
max_string_length = 24
[train]
steps = 12
batch_size = 16
warmup_steps = 6
log_every = 4
eval_every = 6
eval_samples = 32
[eval]
samples = 40
[output]
dir = placeholder
)");
  c.set("output.dir", dir.string());
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("treevae_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_quiet(std::string_view cmd, const RunConfig& cfg, bool force = false) {
  std::ostringstream log, err;
  const int code = run(cmd, cfg, RunOptions{force}, log, err);
  if (code != kExitOk) MESSAGE(cmd << ": " << err.str());
  return code;
}

}  // namespace

TEST_CASE("run config parsing") {
  const RunConfig d;
  CHECK(d.get_int("model.latent_dim") == 128);
  CHECK(d.get_int("eval.rounds") == 10);
  CHECK(d.get_int("eval.interpolate_k") == 20);
  CHECK(d.get("data.columns") == "openaddresses");

  const RunConfig c = RunConfig::from_string("; comment\n[train]\nsteps = 50\nwarmup_steps = 25\nbeta_end=0.5\n[model]\nvariant = text_concat\n");
  CHECK(c.get_int("train.steps") == 50);
  CHECK(c.get_double("train.beta_end") == 0.5);
  const vae::TrainConfig tc = c.train_config();
  CHECK(tc.steps == 50);
  CHECK(tc.variant == ModelVariant::text_concat);

  CHECK_THROWS_AS(RunConfig::from_string("[train]\nstepz = 5\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_string("[nope]\nsteps = 5\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_string("steps = 5\n"), ConfigError);
  RunConfig e;
  e.set("train.steps", "ten");
  CHECK_THROWS_AS(e.get_int("train.steps"), ConfigError);
  CHECK_THROWS_AS(e.apply_override("train.steps"), ConfigError);
  e.apply_override("train.steps=10");
  CHECK(e.get_int("train.steps") == 10);
  e.set("train.warmup_steps", "20");
  CHECK_THROWS_AS(e.train_config(), ConfigError);
}

TEST_CASE("property: canonical ini round trips and hashes stably") {
  RunConfig a;
  a.set("train.steps", "77");
  a.set("model.omitted_fields", "unit,district");
  a.set("train.field_weights", "1,2,1,1,1,1,1,1");
  const RunConfig b = RunConfig::from_string(a.to_ini());
  CHECK(b.to_ini() == a.to_ini());
  CHECK(b.hash() == a.hash());
  CHECK(a.hash().size() == 16);
  CHECK(a.get_list("model.omitted_fields") == std::vector<std::string>{"unit", "district"});
  CHECK(a.get_double_list("train.field_weights")[1] == 2.0);
  RunConfig c = a;
  c.set("train.steps", "78");
  CHECK(c.hash() != a.hash());
  for (const auto& k : RunConfig::keys()) CHECK(a.to_ini().find(k.name.substr(k.name.find('.') + 1)) != std::string::npos);
}

TEST_CASE("commands end to end") {
  TempDir tmp("e2e");
  const RunConfig cfg = small_config(tmp.path);

  CHECK(run_quiet("generate", cfg) == kExitConfig);  // missing checkpoint
  fs::remove(tmp.path / "generate.config.ini");
  CHECK(run_quiet("bogus", cfg) == kExitConfig);

  REQUIRE(run_quiet("ingest", cfg) == kExitOk);
  const auto train_lines = lines_of(tmp.path / "train.jsonl");
  const auto header = nlohmann::json::parse(train_lines.front())["header"];
  CHECK(header["config_hash"] == cfg.hash());
  CHECK(header["split"] == "train");
  CHECK(header["count"].get<std::size_t>() == train_lines.size() - 1);

  REQUIRE(run_quiet("stats", cfg) == kExitOk);
  const auto stats = nlohmann::json::parse(slurp(tmp.path / "stats.json"));
  CHECK(stats["self_test"]["mean"].get<double>() > 0.3);
  CHECK(stats["self_test"]["mean"].get<double>() < 0.7);

  REQUIRE(run_quiet("train", cfg) == kExitOk);
  const auto metrics = lines_of(tmp.path / "metrics.csv");
  CHECK(metrics[0] == "# config_hash=" + cfg.hash());
  CHECK(metrics[1] == "step,split,loss,bpc,kl,beta,p_gt,level");
  int train_rows = 0, test_rows = 0, generated_rows = 0;
  for (std::size_t i = 2; i < metrics.size(); ++i) {
    train_rows += metrics[i].find(",train,") != std::string::npos;
    test_rows += metrics[i].find(",test,") != std::string::npos;
    generated_rows += metrics[i].find(",generated,") != std::string::npos;
  }
  CHECK(train_rows == 3);
  CHECK(test_rows == 3);
  CHECK(generated_rows == 2);

  // Existing outputs are kept unless forced.
  const std::string model_before = slurp(tmp.path / "model.json");
  CHECK(run_quiet("train", cfg) == kExitConfig);
  CHECK(slurp(tmp.path / "model.json") == model_before);

  REQUIRE(run_quiet("generate", cfg, true) == kExitOk);
  const auto gen = lines_of(tmp.path / "generated.jsonl");
  CHECK(gen.size() == 41);
  const auto gstats = nlohmann::json::parse(slurp(tmp.path / "generated_stats.json"));
  CHECK(gstats["pvalues"]["count"] == 40);

  REQUIRE(run_quiet("eval", cfg) == kExitOk);
  const auto ev = nlohmann::json::parse(slurp(tmp.path / "eval.json"));
  CHECK(ev["config_hash"] == cfg.hash());
  CHECK(std::isfinite(ev["test"]["loss"].get<double>()));

  REQUIRE(run_quiet("repeat", cfg) == kExitOk);
  const auto box = lines_of(tmp.path / "repeat_boxplot.csv");
  CHECK(box[1] == "sequence,stat,round_0,round_1,round_2,round_3,round_4,round_5,round_6,round_7,round_8,round_9");
  for (std::size_t i = 2; i < box.size(); ++i) CHECK(std::count(box[i].begin(), box[i].end(), ',') == 11);

  REQUIRE(run_quiet("interpolate", cfg) == kExitOk);
  const auto geo = nlohmann::json::parse(slurp(tmp.path / "interpolation.geojson"));
  CHECK(geo["features"].size() == 20);
  CHECK(geo["config_hash"] == cfg.hash());

  // The echoed config reproduces the run.
  const RunConfig echoed = RunConfig::from_file(tmp.path / "train.config.ini");
  CHECK(echoed.hash() == cfg.hash());
  REQUIRE(run_quiet("train", echoed, true) == kExitOk);
  CHECK(slurp(tmp.path / "model.json") == model_before);
}

TEST_CASE("zero-step training writes a usable untrained model") {
  TempDir tmp("zero");
  RunConfig cfg = small_config(tmp.path);
  cfg.set("train.steps", "0");
  REQUIRE(run_quiet("ingest", cfg) == kExitOk);
  REQUIRE(run_quiet("train", cfg) == kExitOk);
  const auto model = nlohmann::json::parse(slurp(tmp.path / "model.json"));
  CHECK(model["steps"] == 0);
  CHECK(run_quiet("generate", cfg) == kExitOk);
}

TEST_CASE("configuration errors exit with 2") {
  TempDir tmp("errors");
  RunConfig cfg = small_config(tmp.path);
  cfg.set("data.input", (tmp.path / "missing.csv").string());
  CHECK(run_quiet("ingest", cfg) == kExitConfig);
  RunConfig bad = small_config(tmp.path);
  bad.set("train.p_sampled", "0");
  CHECK(run_quiet("train", bad) == kExitConfig);
  CHECK(run_quiet("stats", small_config(tmp.path)) == kExitConfig);  // nothing ingested
  REQUIRE(run_quiet("ingest", small_config(tmp.path)) == kExitOk);
  RunConfig schema = small_config(tmp.path);
  schema.set("data.schema", (tmp.path / "none.schema").string());
  CHECK(run_quiet("train", schema) == kExitConfig);
  std::ofstream(tmp.path / "bad.schema") << "message M { optional int32 x = 1; }\n";
  schema.set("data.schema", (tmp.path / "bad.schema").string());
  CHECK(run_quiet("train", schema) == kExitConfig);
}
