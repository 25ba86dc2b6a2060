#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fcl::config {

/// Flat key/value configuration.
///
///   # comment
///   loss.kind = fcl
///   [train]            # optional section: prefixes following keys with "train."
///   epochs = 40
///
/// Keys are dotted paths. Every entry remembers where it came from so parse
/// and conversion errors can name the file and line.
class Config {
public:
  static Config parse(std::string_view text, const std::string& source = "<string>");
  static Config load(const std::filesystem::path& path);

  /// Sets or replaces a key. origin is used in diagnostics.
  void set(const std::string& key, const std::string& value, const std::string& origin = "<override>");
  /// Applies a "key=value" override.
  void apply_override(std::string_view assignment);
  void erase(const std::string& key);

  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_uint_list(const std::string& key,
                                         const std::vector<std::size_t>& fallback) const;

  /// Throws Error(Config) naming the first key not in `known`.
  void check_known(const std::vector<std::string>& known) const;

  std::map<std::string, std::string> values() const;
  /// Canonical text form: sorted "key = value" lines.
  std::string to_text() const;

private:
  struct Entry {
    std::string value;
    std::string origin;
  };
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::map<std::string, Entry> entries_;
};

} // namespace fcl::config
