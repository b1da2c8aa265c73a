#pragma once

// Flat `key = value` run configuration for the command-line tool. Every key
// is declared per subcommand with its type, range and default.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mfh {

enum class KeyType { Int, Real, Bool, Text, RealList };

struct KeySpec {
  std::string name;
  KeyType type = KeyType::Real;
  std::string default_value;
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
  bool hi_open = false;
  std::vector<std::string> choices;  ///< Text keys: allowed values (empty = any)
  std::string help;

  bool has_range() const { return type == KeyType::Int || type == KeyType::Real || type == KeyType::RealList; }
  /// "(0.5, 1)", "[1, 4]", "one of a|b" or "text".
  std::string range_text() const;
};

std::vector<std::string> subcommand_names();

/// Keys accepted by a subcommand, including out_dir, threads and seed.
const std::vector<KeySpec>& keys_for(const std::string& subcommand);

struct RunConfig {
  std::string subcommand;
  std::map<std::string, std::string> values;  ///< every declared key, resolved
  std::filesystem::path out_dir;
  int threads = 0;  ///< 0 = not set on the command line or file
  std::uint64_t seed = 0;

  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;

  /// `key = value` lines in declaration order; parses back to the same config.
  std::string dump() const;
};

/// Parses `key = value` lines; `#` starts a comment. ValidationError naming
/// the line on anything else.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Resolves defaults < file < flags and validates. Unknown keys and type
/// mismatches raise ValidationError, out-of-range values RangeError; both name
/// the key and its accepted range.
RunConfig parse_config(const std::string& subcommand, const std::map<std::string, std::string>& file_values,
                       const std::map<std::string, std::string>& flag_values);

RunConfig parse_config_file(const std::string& subcommand, const std::filesystem::path& file,
                            const std::map<std::string, std::string>& flag_values);

}  // namespace mfh
