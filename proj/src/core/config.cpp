#include "core/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace anovanet {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string field;
  while (std::getline(ss, field, sep)) parts.push_back(field);
  return parts;
}

}  // namespace

Config Config::parse_text(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    for (const std::string& stmt_raw : split(line, ';')) {
      std::string stmt = stmt_raw;
      const std::size_t hash = stmt.find('#');
      if (hash != std::string::npos) stmt = stmt.substr(0, hash);
      stmt = trim(stmt);
      if (stmt.empty()) continue;
      const std::size_t eq = stmt.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": expected key = value");
      const std::string key = trim(stmt.substr(0, eq));
      const std::string value = strip_quotes(trim(stmt.substr(eq + 1)));
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = value;
    }
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_text(buf.str());
}

void Config::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  if (k.empty()) throw std::runtime_error("empty config key");
  values_[k] = strip_quotes(trim(value));
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : values_) out.push_back(k);
  return out;
}

void Config::require_known(const std::set<std::string>& known) const {
  for (const auto& [k, _] : values_)
    if (!known.count(k)) throw std::runtime_error("unknown config key: " + k);
}

const std::string& Config::raw(const std::string& key) const { return values_.at(key); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

long Config::get_long(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error("config key " + key + ": expected integer, got '" + s + "'");
  return v;
}

int Config::get_int(const std::string& key, int fallback) const {
  return static_cast<int>(get_long(key, fallback));
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error("config key " + key + ": expected number, got '" + s + "'");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = raw(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::runtime_error("config key " + key + ": expected boolean, got '" + s + "'");
}

std::vector<long> Config::get_long_list(const std::string& key, std::vector<long> fallback) const {
  if (!has(key)) return fallback;
  std::vector<long> out;
  for (const std::string& part : split(raw(key), ',')) {
    const std::string p = trim(part);
    if (p.empty()) continue;
    char* end = nullptr;
    const long v = std::strtol(p.c_str(), &end, 10);
    if (end == p.c_str() || *end != '\0')
      throw std::runtime_error("config key " + key + ": expected integer list");
    out.push_back(v);
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key, std::vector<int> fallback) const {
  if (!has(key)) return fallback;
  std::vector<int> out;
  for (const long v : get_long_list(key, {})) out.push_back(static_cast<int>(v));
  return out;
}

std::vector<std::pair<int, int>> Config::get_pair_list(
    const std::string& key, std::vector<std::pair<int, int>> fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::pair<int, int>> out;
  for (const std::string& part : split(raw(key), ',')) {
    const std::string p = trim(part);
    if (p.empty()) continue;
    const std::size_t dash = p.find('-');
    if (dash == std::string::npos || dash == 0 || dash + 1 >= p.size())
      throw std::runtime_error("config key " + key + ": expected pair list like 1-2,3-4");
    char* end = nullptr;
    const std::string lhs = trim(p.substr(0, dash)), rhs = trim(p.substr(dash + 1));
    const long a = std::strtol(lhs.c_str(), &end, 10);
    if (end == lhs.c_str() || *end != '\0')
      throw std::runtime_error("config key " + key + ": bad pair element '" + lhs + "'");
    const long b = std::strtol(rhs.c_str(), &end, 10);
    if (end == rhs.c_str() || *end != '\0')
      throw std::runtime_error("config key " + key + ": bad pair element '" + rhs + "'");
    out.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  return out;
}

}  // namespace anovanet
