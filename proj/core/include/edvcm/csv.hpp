#pragma once

#include <string>
#include <vector>

namespace edvcm {

// Minimal CSV support for the engine's flat file formats: comma separated,
// no quoting, optional leading '#' comment lines. Cell values must not
// contain commas or newlines.
struct CsvTable {
  std::vector<std::string> comments;  // leading '#' lines, verbatim
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;             // -1 if absent
  int require_column(const std::string& name) const;     // throws input_error
};

CsvTable read_csv_file(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);

// Whole-file slurp; throws input_error when the file cannot be opened.
std::string read_file_text(const std::string& path);

std::string format_double(double x);  // shortest round-trip decimal

class CsvWriter {
 public:
  explicit CsvWriter(std::string stamp_line);  // "# edvcm ..." comment or empty
  void set_header(std::vector<std::string> names);
  void add_row(std::vector<std::string> cells);
  void write(const std::string& path) const;
  std::string str() const;

 private:
  std::string stamp_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace edvcm
