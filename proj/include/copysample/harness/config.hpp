#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "copysample/core/error.hpp"

namespace copysample {

/// Sectioned key/value text.
///
/// Grammar, one item per line:
///
///   # comment            ; comment
///   [section]
///   key = value          (value runs to end of line, surrounding blanks trimmed)
///
/// Keys before the first section header belong to section "". Section and
/// key names are case-sensitive; a repeated key overrides the earlier one.
/// List values are whitespace separated.
class KeyValueConfig {
 public:
  using Section = std::map<std::string, std::string>;

  static KeyValueConfig parse(std::istream& is, const std::string& origin = "<config>") {
    KeyValueConfig cfg;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']') throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
        section = trim(t.substr(1, t.size() - 2));
        if (section.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
        cfg.sections_[section];
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(t.substr(0, eq));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.sections_[section][key] = trim(t.substr(eq + 1));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    return parse(is, path.string());
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key);
  }

  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

  const Section& section(const std::string& name) const {
    static const Section empty;
    auto s = sections_.find(name);
    return s == sections_.end() ? empty : s->second;
  }

  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const {
    return has(section, key) ? sections_.at(section).at(key) : fallback;
  }

  std::string require(const std::string& section, const std::string& key) const {
    if (!has(section, key)) throw ConfigError("missing [" + section + "] " + key);
    return sections_.at(section).at(key);
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? to_double(section, key, sections_.at(section).at(key)) : fallback;
  }

  long long get_int(const std::string& section, const std::string& key, long long fallback) const {
    return has(section, key) ? to_int(section, key, sections_.at(section).at(key)) : fallback;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = sections_.at(section).at(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("[" + section + "] " + key + ": expected a boolean, got '" + v + "'");
  }

  std::vector<std::string> get_list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream is(get(section, key, ""));
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
  }

  std::vector<double> get_doubles(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& w : get_list(section, key)) out.push_back(to_double(section, key, w));
    return out;
  }

  void set(const std::string& section, const std::string& key, const std::string& value) { sections_[section][key] = value; }

  /// Canonical text form: sections and keys in lexical order.
  std::string dump() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, kv] : sections_) {
      if (!first) os << '\n';
      first = false;
      if (!name.empty()) os << '[' << name << "]\n";
      for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
    }
    return os.str();
  }

  static double to_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError("[" + section + "] " + key + ": expected a number, got '" + v + "'");
  }

  static long long to_int(const std::string& section, const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const long long i = std::stoll(v, &used);
      if (used == v.size()) return i;
    } catch (const std::exception&) {
    }
    throw ConfigError("[" + section + "] " + key + ": expected an integer, got '" + v + "'");
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return b < e ? std::string(b, e) : std::string();
  }

  std::map<std::string, Section> sections_;
};

}  // namespace copysample
