#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace fairobnc::csv {

// Splits one logical CSV record. Quoted fields may contain commas, doubled
// quotes, and embedded newlines (already joined by read_record).
std::vector<std::string> split_record(const std::string& line);

// Reads one logical record, joining physical lines while a quoted field
// stays open; strips a trailing CR from each physical line. Returns false
// at end of input.
bool read_record(std::istream& in, std::string& record);

// Quotes only when the field contains a comma, quote, or newline.
void write_field(std::ostream& out, const std::string& field);
void write_record(std::ostream& out, const std::vector<std::string>& fields);

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace fairobnc::csv
