#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace roadwatch {

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

std::vector<std::string> split_csv_line(std::string_view line);

std::string trim(std::string_view s);

}  // namespace roadwatch
