#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace pmsys {

using Timestamp = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DD hh:mm:ss" or ISO-8601 ("YYYY-MM-DDThh:mm:ss[.fff][Z|+hh:mm]").
/// Missing zone means UTC; fractional seconds are truncated. Throws ValidationError.
Timestamp parse_timestamp(std::string_view text);

/// Canonical UTC form "YYYY-MM-DD hh:mm:ss".
std::string format_timestamp(Timestamp ts);

}  // namespace pmsys
