#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace aeroalloc::csv {

/// Shortest round-trip decimal representation.
std::string format(double value);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column position of `name`; throws DatasetError when absent.
  std::size_t column(const std::string& name) const;
};

/// Numeric CSV with one header line. Throws DatasetError on malformed input.
Table read(const std::filesystem::path& path);
Table parse(std::istream& is);

void write_row(std::ostream& os, const std::vector<double>& values);
void write_header(std::ostream& os, const std::vector<std::string>& names);

}  // namespace aeroalloc::csv
