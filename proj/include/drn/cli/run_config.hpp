#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drn/search/search.hpp"

namespace drn {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ConfigType { String, Size, Real, Bool, Seed };

struct ConfigKey {
  std::string name;
  std::string default_value;
  ConfigType type;
  std::string help;
};

/// Line-oriented `key = value` settings. `#` starts a comment. Every key has
/// a default, so a fully resolved config can always be written back out.
class RunConfig {
 public:
  RunConfig();

  static const std::vector<ConfigKey>& schema();
  static bool known(std::string_view key);

  /// Throws ConfigError naming the key (and line) for unknown keys or
  /// malformed lines.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// `key=value` form used by command-line overrides.
  void set_assignment(std::string_view assignment);
  const std::string& get(const std::string& key) const;

  std::string get_string(const std::string& key) const { return get(key); }
  std::size_t get_size(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_seed(const std::string& key) const;

  /// Type- and range-checks every key; one ConfigError listing every bad key.
  void validate() const;
  /// All keys in schema order, defaults included.
  std::string format() const;
  void save(const std::filesystem::path& path) const;

  NetworkConfig network_config() const;
  SearchConfig search_config() const;
  RetrainConfig retrain_config() const;
  FeedMode feed_mode() const;
  /// `data_root`, or DARTSRENET_DATA when that key is empty.
  std::filesystem::path data_root() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace drn
