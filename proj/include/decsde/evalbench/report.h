#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace decsde::evalbench {

using Row = std::vector<std::string>;

// RFC 4180 CSV; fields containing ',', '"' or newlines are quoted.
void write_csv(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows);
std::string csv_line(const Row& fields);

// Whitespace-separated columns with a '#' header line, for gnuplot.
void write_gnuplot(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows);

// Fixed notation with `digits` decimals.
std::string fmt(double value, int digits = 4);

}  // namespace decsde::evalbench
