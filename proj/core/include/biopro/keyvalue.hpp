#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biopro {

/// Ordered `key=value` text record. Blank lines and lines starting with '#'
/// are ignored on parse; insertion order is kept on write.
class KeyValue {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, double value);
  void set(std::string key, std::int64_t value);
  void set(std::string key, std::uint64_t value);
  void set(std::string key, int value) { set(std::move(key), static_cast<std::int64_t>(value)); }
  void set(std::string key, bool value) { set(std::move(key), std::string(value ? "true" : "false")); }

  bool contains(std::string_view key) const;
  std::optional<std::string> find(std::string_view key) const;

  // Typed getters throw kFormat when the key is missing or malformed.
  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_string() const;
  static KeyValue parse(std::string_view text);
  static KeyValue load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace biopro
