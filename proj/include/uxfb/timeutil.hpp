#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace uxfb {

using Timestamp = std::chrono::sys_seconds;

/// Accepts "YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM)"; fractional seconds
/// are truncated. Returns nullopt on anything else.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

/// Always UTC with a "Z" suffix and whole seconds.
std::string format_rfc3339(Timestamp ts);

/// Half-open UTC interval [start, end).
struct Period {
  Timestamp start;
  Timestamp end;
  std::string name;

  bool contains(Timestamp ts) const { return start <= ts && ts < end; }
};

/// "2024" (calendar year), "2024Q3" (quarter) or "2024-01-01..2024-02-15".
std::optional<Period> parse_period(std::string_view text);

/// The period of the same kind immediately preceding `p` (same length for
/// explicit ranges).
Period previous_period(const Period& p);

}  // namespace uxfb
