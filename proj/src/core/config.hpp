#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace anovanet {

// TOML-like key/value text: one `key = value` per line (or ';'-separated),
// '#' starts a comment, values are scalars, comma lists ("1,2,3"), or pair
// lists ("1-2,3-4"). Keys are validated against a schema; unknown keys are
// rejected.
class Config {
 public:
  Config() = default;

  static Config parse_text(const std::string& text);
  static Config parse_file(const std::string& path);

  // Apply a "key=value" override on top of the parsed values.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::vector<std::string> keys() const;

  // Throws std::runtime_error naming the first key not in `known`.
  void require_known(const std::set<std::string>& known) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_long(const std::string& key, long fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long> get_long_list(const std::string& key, std::vector<long> fallback) const;
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;
  std::vector<std::pair<int, int>> get_pair_list(const std::string& key,
                                                 std::vector<std::pair<int, int>> fallback) const;

 private:
  std::map<std::string, std::string> values_;
  const std::string& raw(const std::string& key) const;
};

}  // namespace anovanet
