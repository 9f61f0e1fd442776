#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace corridor::cli {

// Column lists for every CSV the CLI writes, keyed by file name.
const std::vector<std::string>& csv_header(const std::string& file);
std::vector<std::string> csv_files();

// Shortest round-trip text for a double; "nan" for NaN.
std::string format_number(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& file, bool append = false);
  CsvWriter& operator<<(const std::string& field);
  CsvWriter& operator<<(const char* field) { return *this << std::string(field); }
  CsvWriter& operator<<(double v) { return *this << format_number(v); }
  CsvWriter& operator<<(long long v) { return *this << std::to_string(v); }
  CsvWriter& operator<<(unsigned long long v) { return *this << std::to_string(v); }
  CsvWriter& operator<<(int v) { return *this << std::to_string(v); }
  void end_row();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::size_t field_ = 0;
};

}  // namespace corridor::cli
