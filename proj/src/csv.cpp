#include "aeroalloc/csv.hpp"

#include "aeroalloc/types.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace aeroalloc::csv {

std::string format(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DatasetError("missing CSV column: " + name);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Table parse(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw DatasetError("CSV input is empty");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != t.header.size())
      throw DatasetError("CSV line " + std::to_string(lineno) + " has the wrong number of fields");
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
        throw DatasetError("CSV line " + std::to_string(lineno) + " has a non-numeric field '" + f + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DatasetError("cannot open " + path.string());
  return parse(is);
}

void write_row(std::ostream& os, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << format(values[i]);
  }
  os << '\n';
}

void write_header(std::ostream& os, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) os << ',';
    os << names[i];
  }
  os << '\n';
}

}  // namespace aeroalloc::csv
