#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace optomech {

// Numeric CSV table: mandatory header row, '#' comment lines, empty cells read as NaN.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Index of a named column, or -1.
  int column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in, std::string_view source_name = "<stream>");
CsvTable read_csv_file(const std::filesystem::path& path);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::span<const double> values);
  void add_row(std::initializer_list<double> values) {
    add_row(std::span<const double>(values.begin(), values.size()));
  }
  std::size_t row_count() const { return rows_; }
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

// Write via a sibling temporary file and rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace optomech
