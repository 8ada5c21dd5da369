#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules.
namespace destrank::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower_ascii(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

/// Collapses every run of whitespace to a single space and trims the ends.
std::string squash_whitespace(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix) noexcept;

/// Lowercase URL-safe slug: "Queenstown (New Zealand)" -> "queenstown-new-zealand".
/// ASCII alphanumerics are kept (lowercased), bytes >= 0x80 pass through, every
/// other run of characters becomes a single hyphen.
std::string slugify(std::string_view name);

/// Formats with `digits` significant digits and parses back, so the value
/// serializes with at most that many digits.
double round_significant(double value, int digits);

std::string read_file(const std::string& path);

}  // namespace destrank::text
