#ifndef BUNDLING_FORMAT_H_
#define BUNDLING_FORMAT_H_

#include <string>
#include <string_view>
#include <vector>

namespace bundling {

// Shortest decimal string that parses back to exactly `value`.
std::string FormatDouble(double value);

// Strict parsers: the whole (trimmed) field must be consumed.
bool ParseDouble(std::string_view text, double* value);
bool ParseSize(std::string_view text, std::size_t* value);
bool ParseUint64(std::string_view text, unsigned long long* value);

std::string_view Trim(std::string_view text);
std::vector<std::string_view> Split(std::string_view text, char separator);

}  // namespace bundling

#endif  // BUNDLING_FORMAT_H_
