#include "v2xtwin/config_text.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "v2xtwin/errors.hpp"

namespace v2xtwin {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                            : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view text, std::size_t line) {
  text = trim(text);
  double value = 0.0;
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  const char* begin = text.data();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError("expected a number, got '" + std::string(text) + "'", line);
  }
  return value;
}

bool parse_flag(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ParseError("expected a boolean, got '" + std::string(text) + "'", line);
}

Vec3 parse_vec3(std::string_view text, std::size_t line) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw ParseError("expected x,y,z, got '" + std::string(text) + "'", line);
  return {parse_number(parts[0], line), parse_number(parts[1], line), parse_number(parts[2], line)};
}

std::vector<Vec3> parse_points(std::string_view text, std::size_t line) {
  std::vector<Vec3> out;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const auto parts = split(item, ',');
    if (parts.size() == 2) {
      out.push_back({parse_number(parts[0], line), parse_number(parts[1], line), 0.0});
    } else if (parts.size() == 3) {
      out.push_back(
          {parse_number(parts[0], line), parse_number(parts[1], line), parse_number(parts[2], line)});
    } else {
      throw ParseError("bad point '" + item + "'", line);
    }
  }
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), ptr};
}

const std::string& ConfigRecord::at(const std::string& key) const {
  const auto it = fields.find(key);
  if (it == fields.end()) throw ParseError("'" + name + "' is missing field '" + key + "'", line);
  return it->second;
}

double ConfigRecord::number(const std::string& key) const { return parse_number(at(key), line); }

double ConfigRecord::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

bool ConfigRecord::flag_or(const std::string& key, bool fallback) const {
  return has(key) ? parse_flag(at(key), line) : fallback;
}

std::string ConfigRecord::text_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? at(key) : fallback;
}

double ConfigSection::number_or(const std::string& key, double fallback) const {
  const auto it = settings.find(key);
  return it == settings.end() ? fallback : parse_number(it->second.value, it->second.line);
}

bool ConfigSection::flag_or(const std::string& key, bool fallback) const {
  const auto it = settings.find(key);
  return it == settings.end() ? fallback : parse_flag(it->second.value, it->second.line);
}

std::string ConfigSection::text_or(const std::string& key, const std::string& fallback) const {
  const auto it = settings.find(key);
  return it == settings.end() ? fallback : it->second.value;
}

ConfigDocument ConfigDocument::parse(std::string_view text) {
  ConfigDocument doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ParseError("malformed section header", line_no);
      ConfigSection section;
      section.name = std::string(trim(line.substr(1, line.size() - 2)));
      section.line = line_no;
      if (doc.find(section.name) != nullptr) {
        throw ParseError("duplicate section [" + section.name + "]", line_no);
      }
      doc.sections_.push_back(std::move(section));
      continue;
    }
    if (doc.sections_.empty()) throw ParseError("content before first section", line_no);
    auto& section = doc.sections_.back();

    const auto toks = tokens(line);
    if (toks.size() >= 2 && toks[1] == "=") {
      // key = value (value may contain spaces)
      const auto eq = line.find('=');
      const auto key = std::string(toks[0]);
      const auto value = std::string(trim(line.substr(eq + 1)));
      if (value.empty()) throw ParseError("empty value for '" + key + "'", line_no);
      if (section.settings.contains(key)) throw ParseError("duplicate key '" + key + "'", line_no);
      section.settings[key] = {value, line_no};
      continue;
    }

    ConfigRecord record;
    record.name = std::string(toks.front());
    record.line = line_no;
    if (record.name.find('=') != std::string::npos) {
      throw ParseError("record must start with a name, got '" + record.name + "'", line_no);
    }
    for (std::size_t i = 1; i < toks.size(); ++i) {
      const auto eq = toks[i].find('=');
      if (eq == std::string_view::npos || eq == 0 || eq + 1 == toks[i].size()) {
        throw ParseError("expected key=value, got '" + std::string(toks[i]) + "'", line_no);
      }
      const auto key = std::string(toks[i].substr(0, eq));
      if (record.fields.contains(key)) throw ParseError("duplicate field '" + key + "'", line_no);
      record.fields[key] = std::string(toks[i].substr(eq + 1));
    }
    section.records.push_back(std::move(record));
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const ConfigSection* ConfigDocument::find(std::string_view name) const {
  const auto it = std::find_if(sections_.begin(), sections_.end(),
                               [&](const ConfigSection& s) { return s.name == name; });
  return it == sections_.end() ? nullptr : &*it;
}

}  // namespace v2xtwin
