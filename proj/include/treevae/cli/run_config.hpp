#pragma once

#include "treevae/data.hpp"
#include "treevae/vae/config.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace treevae::cli {

using vae::ConfigError;

// Every setting is `section.key`. Files use INI syntax:
//
//   [train]
//   steps = 20000
//
// Unknown sections or keys are rejected, as are malformed values.
class RunConfig {
 public:
  struct Key {
    std::string name;  // section.key
    std::string default_value;
    std::string help;
  };
  static const std::vector<Key>& keys();

  RunConfig();  // defaults
  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_string(std::string_view ini);

  void set(std::string_view key, std::string value);
  // "section.key=value"
  void apply_override(std::string_view assignment);

  const std::string& get(std::string_view key) const;
  std::string get_string(std::string_view key) const { return get(key); }
  long long get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;  // comma separated
  std::vector<double> get_double_list(std::string_view key) const;

  vae::TrainConfig train_config() const;
  ColumnMap column_map() const;

  // Canonical INI text of every key; from_string(to_ini()) reproduces this
  // config.
  std::string to_ini() const;
  // 16 hex digits of FNV-1a over to_ini().
  std::string hash() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace treevae::cli
