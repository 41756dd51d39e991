#include "pfising/report.hpp"

#include <cstdio>
#include <stdexcept>

namespace pfising {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), width_(header.size()) {
  out_ << "schema: 1\r\n";
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (col_ == width_) throw std::logic_error("csv: too many cells in row");
  if (col_++ > 0) out_ << ',';
  out_ << csv_quote(s);
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(fmt(v)); }
CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  if (col_ != width_) throw std::logic_error("csv: short row");
  out_ << "\r\n";
  col_ = 0;
}

}  // namespace pfising
