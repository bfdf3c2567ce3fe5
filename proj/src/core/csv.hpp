#pragma once

// Minimal delimiter-separated text helpers shared by the file readers and
// writers. Fields containing the delimiter, quotes or newlines are quoted.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ensrec/error.hpp"

namespace ensrec::csv {

// Splits one line. Double-quoted fields may contain the delimiter and "" for a
// literal quote. Returns nullopt on an unterminated quote.
inline std::optional<std::vector<std::string>> split_line(std::string_view line,
                                                          std::string_view delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::size_t i = 0;
  bool quoted_field = false;
  while (true) {
    if (i < line.size() && line[i] == '"' && field.empty() && !quoted_field) {
      quoted_field = true;
      ++i;
      for (;;) {
        if (i >= line.size()) return std::nullopt;
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field += line[i++];
      }
    }
    if (i >= line.size()) {
      fields.push_back(std::move(field));
      return fields;
    }
    if (line.compare(i, delimiter.size(), delimiter) == 0) {
      fields.push_back(std::move(field));
      field.clear();
      quoted_field = false;
      i += delimiter.size();
      continue;
    }
    field += line[i++];
  }
}

inline std::string quote(std::string_view field, char delimiter = ',') {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos &&
      !field.empty())
    return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string copy(s);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (end != copy.c_str() + copy.size()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

class LineReader {
 public:
  explicit LineReader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw io_error("cannot open '" + path + "'");
  }

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  std::size_t line_number() const { return line_number_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw format_error(path_ + ":" + std::to_string(line_number_) + ": " + message);
  }

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t line_number_ = 0;
};

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write '" + path + "'");
  return out;
}

}  // namespace ensrec::csv
