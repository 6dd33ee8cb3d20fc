#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sscil::text {

std::string_view trim(std::string_view s) noexcept;

// Splits on commas; fields are trimmed. No quoting support: ids, uris and
// labels in the harness's files never contain commas.
std::vector<std::string> split_csv(std::string_view line);

// Strict integer parse of the whole field; returns false on any junk.
bool parse_int(std::string_view s, long long& out) noexcept;

std::vector<int> parse_int_list(std::string_view s);

}  // namespace sscil::text
