#pragma once

// Reader for the TOML subset used by matrix and run configuration files:
// comments, [table] / [a.b] headers, bare/quoted/dotted keys, strings,
// integers, floats, booleans, (multi-line) arrays and inline tables.
// Documents are returned as JSON objects.

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vtab/core.hpp"

namespace vtab::toml {

namespace detail {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  Json parse_document() {
    Json root = Json::object();
    Json* table = &root;
    for (;;) {
      skip_ws_comments_newlines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        skip_inline_ws();
        auto path = parse_key_path();
        skip_inline_ws();
        expect(']');
        table = &root;
        for (const auto& part : path) {
          if (!table->contains(part)) (*table)[part] = Json::object();
          table = &(*table)[part];
          if (!table->is_object()) fail("key '" + part + "' is not a table");
        }
      } else {
        auto path = parse_key_path();
        skip_inline_ws();
        expect('=');
        skip_inline_ws();
        Json value = parse_value();
        assign(*table, path, std::move(value));
      }
      skip_inline_ws();
      if (!eof() && peek() == '#') skip_comment();
      if (!eof() && peek() != '\n' && peek() != '\r') fail("expected end of line");
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { throw FormatError(message, line_); }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    while (!eof() && peek() != '\n') ++pos_;
  }

  void skip_ws_comments_newlines() {
    while (!eof()) {
      const char c = peek();
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  static bool is_bare(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> parts;
    for (;;) {
      skip_inline_ws();
      if (peek() == '"' || peek() == '\'') {
        parts.push_back(parse_string());
      } else {
        const auto start = pos_;
        while (!eof() && is_bare(peek())) ++pos_;
        if (start == pos_) fail("expected a key");
        parts.emplace_back(text_.substr(start, pos_ - start));
      }
      skip_inline_ws();
      if (peek() != '.') break;
      ++pos_;
    }
    return parts;
  }

  void assign(Json& table, const std::vector<std::string>& path, Json value) {
    Json* cur = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (!cur->contains(path[i])) (*cur)[path[i]] = Json::object();
      cur = &(*cur)[path[i]];
      if (!cur->is_object()) fail("key '" + path[i] + "' is not a table");
    }
    if (cur->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*cur)[path.back()] = std::move(value);
  }

  std::string parse_string() {
    const char quote = peek();
    ++pos_;
    std::string out;
    while (!eof() && peek() != quote) {
      char c = peek();
      if (c == '\n') fail("unterminated string");
      ++pos_;
      if (quote == '"' && c == '\\') {
        const char e = peek();
        ++pos_;
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case '\\': out.push_back('\\'); break;
          case '"': out.push_back('"'); break;
          default: fail(std::string("unsupported escape \\") + e);
        }
        continue;
      }
      out.push_back(c);
    }
    if (eof()) fail("unterminated string");
    ++pos_;
    return out;
  }

  Json parse_value() {
    const char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    const auto start = pos_;
    while (!eof() && (is_bare(peek()) || peek() == '.' || peek() == '+')) ++pos_;
    std::string token(text_.substr(start, pos_ - start));
    if (token.empty()) fail("expected a value");
    if (token == "true") return true;
    if (token == "false") return false;
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits.push_back(ch);
    }
    if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
    const bool is_float = digits.find_first_of(".eE") != std::string::npos &&
                          digits.rfind("0x", 0) != 0;
    if (is_float) {
      double v = 0;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc() || p != digits.data() + digits.size()) fail("bad float '" + token + "'");
      return v;
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || p != digits.data() + digits.size()) fail("bad value '" + token + "'");
    return v;
  }

  Json parse_array() {
    expect('[');
    Json arr = Json::array();
    for (;;) {
      skip_ws_comments_newlines();
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(parse_value());
      skip_ws_comments_newlines();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  Json parse_inline_table() {
    expect('{');
    Json table = Json::object();
    skip_inline_ws();
    if (peek() == '}') {
      ++pos_;
      return table;
    }
    for (;;) {
      auto path = parse_key_path();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      assign(table, path, parse_value());
      skip_inline_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return table;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace detail

inline Json parse(std::string_view text) { return detail::Reader(text).parse_document(); }

inline Json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.line);
  }
}

}  // namespace vtab::toml
