#include "bundling/format.h"

#include <charconv>
#include <cmath>

namespace bundling {

std::string FormatDouble(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buffer[64];
  auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::string_view Trim(std::string_view text) {
  const char* ws = " \t\r\n";
  const auto begin = text.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(ws);
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string_view> Split(std::string_view text, char separator) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(separator, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

bool ParseDouble(std::string_view text, double* value) {
  text = Trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  double parsed = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed);
  if (ec != std::errc() || ptr != text.data() + text.size()) return false;
  if (!std::isfinite(parsed)) return false;
  *value = parsed;
  return true;
}

bool ParseUint64(std::string_view text, unsigned long long* value) {
  text = Trim(text);
  if (text.empty()) return false;
  unsigned long long parsed = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed);
  if (ec != std::errc() || ptr != text.data() + text.size()) return false;
  *value = parsed;
  return true;
}

bool ParseSize(std::string_view text, std::size_t* value) {
  unsigned long long parsed = 0;
  if (!ParseUint64(text, &parsed)) return false;
  *value = static_cast<std::size_t>(parsed);
  return true;
}

}  // namespace bundling
