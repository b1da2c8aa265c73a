#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfh/core.hpp"

namespace mfh {

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Writes `<stem>.csv` (header t,value) and `<stem>.meta.json`.
void write_path(const SamplePath& path, const std::filesystem::path& stem);
SamplePath read_path(const std::filesystem::path& stem);

/// Matrix CSV: first row "t\h" then the h grid, first column the t grid.
void write_field(const GeneratorFieldSample& field, const std::filesystem::path& file);
GeneratorFieldSample read_field(const std::filesystem::path& file);

/// Numeric table with a header row. Throws MalformedCsv naming the row of the
/// first non-numeric token.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<double> column(std::size_t i) const;
};
CsvTable read_csv(const std::filesystem::path& file);
CsvTable parse_csv(const std::string& text);
void write_csv(const CsvTable& table, const std::filesystem::path& file);
std::string to_csv(const CsvTable& table);

std::string read_text(const std::filesystem::path& file);
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace mfh
