#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace okdrop::kv {

/// Strict subset of TOML: [section] headers, key = value lines, '#' comments.
/// Values are numbers, booleans, double-quoted strings and flat arrays of those.
struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<double, bool, std::string, Array> data;
  bool integral = false;
  std::size_t line = 0;
  std::size_t column = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }
};

struct Entry {
  Value value;
  std::size_t line = 0;
  std::size_t column = 0;
};

/// Keys are qualified as "section.key"; top-level keys have no prefix.
using Document = std::map<std::string, Entry>;

/// Throws ValidationError with line and column on malformed input or duplicate keys.
Document parse(const std::string& text);
Document parse_file(const std::string& path);

/// Candidate with the smallest edit distance, or "" if none is within distance 3.
std::string closest(const std::string& key, const std::vector<std::string>& candidates);

/// Typed accessors; throw ValidationError located at the value.
double as_number(const Entry& e, const std::string& key);
long as_integer(const Entry& e, const std::string& key);
bool as_bool(const Entry& e, const std::string& key);
std::string as_string(const Entry& e, const std::string& key);
std::vector<double> as_number_array(const Entry& e, const std::string& key);

}  // namespace okdrop::kv
