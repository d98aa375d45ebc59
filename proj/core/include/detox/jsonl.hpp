#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <string>

namespace detox {

// Calls fn(line_number, line) for every non-blank line of a line-delimited
// stream. Line numbers are 1-based and count blank lines too; trailing \r is
// stripped so CRLF input behaves like LF.
void for_each_line(
    std::istream& in,
    const std::function<void(std::uint64_t, const std::string&)>& fn);

}  // namespace detox
