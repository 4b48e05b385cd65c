#include "treevae/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace treevae;

int main(int argc, char** argv) {
  CLI::App app{"Schema-driven tree-recursive VAE for address records"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show every subcommand and config key");

  std::string config_file;
  std::vector<std::string> overrides;
  bool force = false;
  app.add_option("-c,--config", config_file, "INI config file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides, "Override one key: section.key=value (repeatable)");
  app.add_flag("-f,--force", force, "Overwrite existing outputs");

  const std::vector<std::pair<std::string, std::string>> help = {
      {"ingest", "Parse data.input (CSV or 'toy') and write the 8:1:1 split as JSON lines"},
      {"stats", "p-value self-test of data.train against its own per-zip Gaussians"},
      {"train", "Train a model; writes metrics.csv and model.json"},
      {"generate", "Sample eval.samples records from a checkpoint"},
      {"eval", "Test loss, generated loss, p-values, street membership and Levenshtein"},
      {"repeat", "p-value box plots over repeated encoding and decoding"},
      {"interpolate", "Latent interpolation between two training records as GeoJSON"},
  };
  for (const auto& [name, text] : help) app.add_subcommand(name, text);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All) << "config keys (section.key = default):\n";
    for (const auto& k : cli::RunConfig::keys()) std::cout << "  " << k.name << " = " << k.default_value << "  " << k.help << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitConfig;
  }

  cli::RunConfig cfg;
  try {
    if (!config_file.empty()) cfg = cli::RunConfig::from_file(config_file);
    for (const auto& o : overrides) cfg.apply_override(o);
  } catch (const cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return cli::run(command, cfg, cli::RunOptions{force}, std::cout, std::cerr);
}
