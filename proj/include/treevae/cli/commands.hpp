#pragma once

#include "treevae/cli/run_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace treevae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// ingest, stats, train, generate, eval, repeat, interpolate
const std::vector<std::string>& command_names();

// Files a command writes into the output directory.
std::vector<std::string> declared_outputs(std::string_view command);

// output.dir, unless TREEVAE_OUTPUT_DIR is set.
std::filesystem::path output_dir(const RunConfig& cfg);

struct RunOptions {
  bool force = false;  // overwrite existing outputs
};

// Runs one command. Progress goes to `log`, diagnostics to `err`. Returns
// 0 on success, 2 for configuration errors, 1 for runtime failures.
int run(std::string_view command, const RunConfig& cfg, const RunOptions& opt, std::ostream& log, std::ostream& err);

}  // namespace treevae::cli
