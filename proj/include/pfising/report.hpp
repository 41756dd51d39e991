#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pfising {

// 17 significant digits, dot decimal.
std::string fmt(double v);

// RFC-4180 style writer; the first row is the schema tag.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  void end_row();

 private:
  std::ostream& out_;
  std::size_t width_;
  std::size_t col_ = 0;
};

std::string csv_quote(const std::string& s);

}  // namespace pfising
