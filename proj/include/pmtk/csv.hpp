#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Minimal RFC-4180 CSV reading and writing.

namespace pmtk {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index for a header name, -1 if absent.
  int column(const std::string& name) const;
};

struct CsvError {
  std::string message;
  std::size_t line = 0;  // 1-based, 0 when not row-specific
};

/// Parses CSV text. The first record is the header. Quoted fields may
/// contain commas, quotes (doubled), and newlines.
CsvTable parse_csv(const std::string& text);

std::string csv_escape(const std::string& field);

void write_csv(std::ostream& out, const CsvTable& table);
std::string to_csv(const CsvTable& table);

}  // namespace pmtk
