#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sdjscc {

// Shortest decimal that round-trips to the same double ("inf", "nan" for the
// special values).
std::string format_double(double value);

std::string csv_join(const std::vector<std::string>& fields);

// Splits one CSV line on commas (no quoting; the project's files never quote).
std::vector<std::string> csv_split(std::string_view line);

}  // namespace sdjscc
