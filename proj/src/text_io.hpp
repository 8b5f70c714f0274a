#pragma once

// Helpers shared by the line-oriented text formats (expansions, networks,
// point files). Numbers are written with 17 significant digits so that a
// write/read cycle reproduces every double bit for bit.

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace polyinit::detail {

std::string format_double(double value);

double parse_double(std::string_view token);
long parse_long(std::string_view token);

std::vector<std::string_view> split(std::string_view line, std::string_view delimiters);

// Reads lines, skipping blank lines and '#' comments, and tracks the line
// number for error messages.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next significant line split on whitespace; false at end of stream.
  bool next(std::vector<std::string_view>& tokens);
  // Next significant line that must exist and start with `keyword`.
  std::vector<std::string_view> expect(std::string_view keyword, std::size_t arg_count);

  int line_number() const { return line_number_; }
  [[noreturn]] void fail(const std::string& message) const;

 private:
  std::istream& in_;
  std::string line_;
  int line_number_ = 0;
};

}  // namespace polyinit::detail
