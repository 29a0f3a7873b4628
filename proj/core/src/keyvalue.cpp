#include "okdrop/keyvalue.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "okdrop/errors.hpp"

namespace okdrop::kv {
namespace {

class LineParser {
 public:
  LineParser(const std::string& text, std::size_t line) : s_(text), line_(line) {}

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool at_end_or_comment() {
    skip_space();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  std::size_t column() const { return pos_ + 1; }
  [[noreturn]] void fail(const std::string& msg) const { throw ValidationError(msg, line_, column()); }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  bool consume(char c) {
    skip_space();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string bare_key() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                s_[pos_] == '-'))
      ++pos_;
    if (start == pos_) fail("expected a key");
    return s_.substr(start, pos_ - start);
  }

  Value value(bool allow_array = true) {
    skip_space();
    Value v;
    v.line = line_;
    v.column = column();
    const char c = peek();
    if (c == '"') {
      ++pos_;
      std::string out;
      while (true) {
        if (pos_ >= s_.size()) fail("unterminated string");
        char ch = s_[pos_++];
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos_ >= s_.size()) fail("unterminated escape");
          const char e = s_[pos_++];
          switch (e) {
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            default: --pos_; fail(std::string("unsupported escape \\") + e);
          }
        } else {
          out.push_back(ch);
        }
      }
      v.data = std::move(out);
      return v;
    }
    if (c == '[') {
      if (!allow_array) fail("nested arrays are not supported");
      ++pos_;
      Array items;
      skip_space();
      if (consume(']')) {
        v.data = std::move(items);
        return v;
      }
      while (true) {
        items.push_back(value(false));
        if (consume(',')) {
          if (consume(']')) break;
          continue;
        }
        if (consume(']')) break;
        fail("expected ',' or ']' in array");
      }
      v.data = std::move(items);
      return v;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != ',' &&
           s_[pos_] != ']' && s_[pos_] != '#')
      ++pos_;
    std::string token = s_.substr(start, pos_ - start);
    if (token.empty()) {
      pos_ = start;
      fail("expected a value");
    }
    if (token == "true" || token == "false") {
      v.data = token == "true";
      return v;
    }
    std::string digits;
    for (char ch : token)
      if (ch != '_') digits.push_back(ch);
    const char* first = digits.data();
    if (!digits.empty() && digits[0] == '+') ++first;
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(first, digits.data() + digits.size(), d);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || !std::isfinite(d)) {
      pos_ = start;
      fail("invalid value '" + token + "' (strings must be double-quoted)");
    }
    v.data = d;
    v.integral = digits.find_first_of(".eE") == std::string::npos;
    return v;
  }

 private:
  const std::string& s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

[[noreturn]] void type_error(const Entry& e, const std::string& key, const std::string& expected) {
  throw ValidationError("'" + key + "' must be " + expected, e.value.line, e.value.column);
}

}  // namespace

Document parse(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    LineParser p(raw, line_no);
    if (p.at_end_or_comment()) continue;
    if (p.consume('[')) {
      section = p.bare_key();
      if (!p.consume(']')) p.fail("expected ']' after section name");
      if (!p.at_end_or_comment()) p.fail("unexpected text after section header");
      continue;
    }
    p.skip_space();
    const std::size_t col = p.column();
    const std::string key = p.bare_key();
    if (!p.consume('=')) p.fail("expected '=' after key '" + key + "'");
    Value v = p.value();
    if (!p.at_end_or_comment()) p.fail("unexpected text after value");
    const std::string full = section.empty() ? key : section + "." + key;
    if (doc.count(full)) throw ValidationError("duplicate key '" + full + "'", line_no, col);
    doc.emplace(full, Entry{std::move(v), line_no, col});
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string closest(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = 4;
  for (const auto& c : candidates) {
    std::vector<std::size_t> prev(c.size() + 1), cur(c.size() + 1);
    for (std::size_t j = 0; j <= c.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= key.size(); ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= c.size(); ++j)
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (key[i - 1] == c[j - 1] ? 0 : 1)});
      std::swap(prev, cur);
    }
    if (prev[c.size()] < best_d) {
      best_d = prev[c.size()];
      best = c;
    }
  }
  return best;
}

double as_number(const Entry& e, const std::string& key) {
  if (!e.value.is_number()) type_error(e, key, "a number");
  return std::get<double>(e.value.data);
}

long as_integer(const Entry& e, const std::string& key) {
  if (!e.value.is_number() || !e.value.integral) type_error(e, key, "an integer");
  const double d = std::get<double>(e.value.data);
  if (std::abs(d) > 9.0e15) type_error(e, key, "an integer below 2^53");
  return static_cast<long>(d);
}

bool as_bool(const Entry& e, const std::string& key) {
  if (!e.value.is_bool()) type_error(e, key, "true or false");
  return std::get<bool>(e.value.data);
}

std::string as_string(const Entry& e, const std::string& key) {
  if (!e.value.is_string()) type_error(e, key, "a quoted string");
  return std::get<std::string>(e.value.data);
}

std::vector<double> as_number_array(const Entry& e, const std::string& key) {
  if (!e.value.is_array()) type_error(e, key, "an array of numbers");
  std::vector<double> out;
  for (const auto& v : std::get<Array>(e.value.data)) {
    if (!v.is_number()) throw ValidationError("'" + key + "' must contain only numbers", v.line, v.column);
    out.push_back(std::get<double>(v.data));
  }
  return out;
}

}  // namespace okdrop::kv
