#include "biopro/keyvalue.hpp"

#include "biopro/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace biopro {

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (text == "inf" || text == "+inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(ErrorCode::kFormat, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view text) {
  const auto* ws = " \t\r\n";
  const auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(ws);
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

void KeyValue::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void KeyValue::set(std::string key, double value) { set(std::move(key), format_double(value)); }
void KeyValue::set(std::string key, std::int64_t value) { set(std::move(key), std::to_string(value)); }
void KeyValue::set(std::string key, std::uint64_t value) { set(std::move(key), std::to_string(value)); }

bool KeyValue::contains(std::string_view key) const { return find(key).has_value(); }

std::optional<std::string> KeyValue::find(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

const std::string& KeyValue::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  fail(ErrorCode::kFormat, "missing key '" + std::string(key) + "'");
}

double KeyValue::get_double(std::string_view key) const { return parse_double(get(key)); }

std::int64_t KeyValue::get_int(std::string_view key) const {
  const auto& text = get(key);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(ErrorCode::kFormat, "key '" + std::string(key) + "' is not an integer: '" + text + "'");
  }
  return value;
}

std::uint64_t KeyValue::get_uint(std::string_view key) const {
  const auto& text = get(key);
  std::uint64_t value = 0;
  int base = 10;
  std::string_view digits = text;
  if (digits.starts_with("0x")) {
    base = 16;
    digits.remove_prefix(2);
  }
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, base);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
    fail(ErrorCode::kFormat, "key '" + std::string(key) + "' is not an unsigned integer: '" + text + "'");
  }
  return value;
}

bool KeyValue::get_bool(std::string_view key) const {
  const auto& text = get(key);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  fail(ErrorCode::kFormat, "key '" + std::string(key) + "' is not a boolean: '" + text + "'");
}

std::string KeyValue::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

KeyValue KeyValue::parse(std::string_view text) {
  KeyValue kv;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": expected key=value");
    }
    kv.set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

KeyValue KeyValue::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

void KeyValue::save(const std::filesystem::path& path) const { write_file_atomic(path, to_string()); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::kIo, "short write to '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot rename into '" + path.string() + "'");
  }
}

}  // namespace biopro
