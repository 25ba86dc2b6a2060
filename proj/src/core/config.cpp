#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace fcl::config {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') {
    return false;
  }
  return std::all_of(key.begin(), key.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '.' || c == '-';
  });
}

} // namespace

Config Config::parse(std::string_view text, const std::string& source) {
  Config cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(ErrorCode::Config, where + ": unterminated section header");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!section.empty() && !valid_key(section)) {
        throw Error(ErrorCode::Config, where + ": invalid section name '" + section + "'");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, where + ": expected 'key = value', got '" + line + "'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (!section.empty()) {
      key = section + "." + key;
    }
    if (!valid_key(key)) {
      throw Error(ErrorCode::Config, where + ": invalid key '" + key + "'");
    }
    if (cfg.entries_.count(key) != 0) {
      throw Error(ErrorCode::Config, where + ": duplicate key '" + key + "' (first set at " +
                                         cfg.entries_[key].origin + ")");
    }
    cfg.entries_[key] = {value, where};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Io, "config file not found: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value, const std::string& origin) {
  if (!valid_key(key)) {
    throw Error(ErrorCode::Config, origin + ": invalid key '" + key + "'");
  }
  entries_[key] = {value, origin};
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::Config,
                "override '" + std::string(assignment) + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)),
      "override '" + std::string(assignment) + "'");
}

void Config::erase(const std::string& key) { entries_.erase(key); }

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second.value;
}

void Config::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  const std::string where = it == entries_.end() ? std::string("<default>") : it->second.origin;
  throw Error(ErrorCode::Config, where + ": key '" + key + "': " + what);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size()) {
      fail(key, "expected a number, got '" + *v + "'");
    }
    return d;
  } catch (const std::logic_error&) {
    fail(key, "expected a number, got '" + *v + "'");
  }
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    fail(key, "expected a non-negative integer, got '" + *v + "'");
  }
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  fail(key, "expected true/false, got '" + *v + "'");
}

std::vector<std::size_t> Config::get_uint_list(const std::string& key,
                                               const std::vector<std::size_t>& fallback) const {
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  std::vector<std::size_t> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      continue;
    }
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), n);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      fail(key, "expected a comma-separated list of integers, got '" + *v + "'");
    }
    out.push_back(n);
  }
  return out;
}

void Config::check_known(const std::vector<std::string>& known) const {
  for (const auto& [key, entry] : entries_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::Config, entry.origin + ": unknown key '" + key + "'");
    }
  }
}

std::map<std::string, std::string> Config::values() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, entry] : entries_) {
    out[key] = entry.value;
  }
  return out;
}

std::string Config::to_text() const {
  std::ostringstream out;
  for (const auto& [key, entry] : entries_) {
    out << key << " = " << entry.value << '\n';
  }
  return out.str();
}

} // namespace fcl::config
