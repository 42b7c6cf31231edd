#pragma once

#include <string>
#include <vector>

namespace diffmia {

// Shortest exact decimal form that round-trips a double.
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Reads a comma-separated file. Returns rows of fields; the first row is the
// header when header != nullptr.
std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               std::vector<std::string>* header);

}  // namespace diffmia
