#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ptm {

// Strict ISO-8601 UTC instant, whole seconds: YYYY-MM-DDTHH:MM:SSZ.
std::optional<std::int64_t> parse_iso8601_utc(std::string_view text);
std::string format_iso8601_utc(std::int64_t epoch_seconds);

}  // namespace ptm
