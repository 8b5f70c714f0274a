#include "text_io.hpp"

#include <charconv>
#include <cmath>

#include "polyinit/error.hpp"

namespace polyinit::detail {

std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                 std::chars_format::general, 17);
  if (ec != std::errc()) throw InvalidArgument("cannot format number");
  return std::string(buffer, end);
}

double parse_double(std::string_view token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw InvalidArgument("invalid number '" + std::string(token) + "'");
  }
  return value;
}

long parse_long(std::string_view token) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw InvalidArgument("invalid integer '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, std::string_view delimiters) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const std::size_t start = line.find_first_not_of(delimiters, pos);
    if (start == std::string_view::npos) break;
    std::size_t stop = line.find_first_of(delimiters, start);
    if (stop == std::string_view::npos) stop = line.size();
    tokens.push_back(line.substr(start, stop - start));
    pos = stop;
  }
  return tokens;
}

bool LineReader::next(std::vector<std::string_view>& tokens) {
  while (std::getline(in_, line_)) {
    ++line_number_;
    const std::size_t hash = line_.find('#');
    std::string_view view(line_);
    if (hash != std::string::npos) view = view.substr(0, hash);
    tokens = split(view, " \t\r");
    if (!tokens.empty()) return true;
  }
  tokens.clear();
  return false;
}

std::vector<std::string_view> LineReader::expect(std::string_view keyword, std::size_t arg_count) {
  std::vector<std::string_view> tokens;
  if (!next(tokens)) fail("unexpected end of file, expected '" + std::string(keyword) + "'");
  if (tokens.front() != keyword) {
    fail("expected '" + std::string(keyword) + "', found '" + std::string(tokens.front()) + "'");
  }
  if (tokens.size() != arg_count + 1) {
    fail("'" + std::string(keyword) + "' takes " + std::to_string(arg_count) + " values");
  }
  return tokens;
}

void LineReader::fail(const std::string& message) const {
  throw InvalidArgument("line " + std::to_string(line_number_) + ": " + message);
}

}  // namespace polyinit::detail
