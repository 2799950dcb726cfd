#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "v2xtwin/vec3.hpp"

namespace v2xtwin {

/// One `name key=value key=value ...` line inside a section.
struct ConfigRecord {
  std::string name;
  std::map<std::string, std::string> fields;
  std::size_t line = 0;

  [[nodiscard]] bool has(const std::string& key) const { return fields.contains(key); }
  [[nodiscard]] const std::string& at(const std::string& key) const;
  [[nodiscard]] double number(const std::string& key) const;
  [[nodiscard]] double number_or(const std::string& key, double fallback) const;
  [[nodiscard]] bool flag_or(const std::string& key, bool fallback) const;
  [[nodiscard]] std::string text_or(const std::string& key, const std::string& fallback) const;
};

struct ConfigSetting {
  std::string value;
  std::size_t line = 0;
};

/// A `[name]` block holding `key = value` settings and free-form records.
struct ConfigSection {
  std::string name;
  std::size_t line = 0;
  std::map<std::string, ConfigSetting> settings;
  std::vector<ConfigRecord> records;

  [[nodiscard]] bool has(const std::string& key) const { return settings.contains(key); }
  [[nodiscard]] double number_or(const std::string& key, double fallback) const;
  [[nodiscard]] bool flag_or(const std::string& key, bool fallback) const;
  [[nodiscard]] std::string text_or(const std::string& key, const std::string& fallback) const;
};

/// Parsed scenario text: sections in file order. Comments start with '#'.
class ConfigDocument {
 public:
  static ConfigDocument parse(std::string_view text);
  static ConfigDocument load(const std::string& path);

  [[nodiscard]] const ConfigSection* find(std::string_view name) const;
  [[nodiscard]] const std::vector<ConfigSection>& sections() const { return sections_; }

 private:
  std::vector<ConfigSection> sections_;
};

double parse_number(std::string_view text, std::size_t line);
bool parse_flag(std::string_view text, std::size_t line);
Vec3 parse_vec3(std::string_view text, std::size_t line);
/// "x,y[,z];x,y[,z];..." -> points; missing z is 0.
std::vector<Vec3> parse_points(std::string_view text, std::size_t line);
std::vector<std::string> split(std::string_view text, char sep);
std::string format_double(double v);

}  // namespace v2xtwin
