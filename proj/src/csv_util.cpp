#include "csv_util.hpp"

#include "fairobnc/errors.hpp"

namespace fairobnc::csv {

namespace {

// Mirrors split_record's quote handling; false means the record ends inside
// an open quoted field and needs the next physical line.
bool record_complete(const std::string& rec) {
  bool quoted = false;
  bool cur_empty = true;
  size_t i = 0;
  const size_t n = rec.size();
  while (i < n) {
    char c = rec[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && rec[i + 1] == '"') {
          cur_empty = false;
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        cur_empty = false;
        ++i;
      }
    } else if (c == '"' && cur_empty) {
      quoted = true;
      ++i;
    } else if (c == ',') {
      cur_empty = true;
      ++i;
    } else {
      cur_empty = false;
      ++i;
    }
  }
  return !quoted;
}

}  // namespace

bool read_record(std::istream& in, std::string& record) {
  record.clear();
  std::string line;
  bool have_any = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (have_any) record.push_back('\n');
    record += line;
    have_any = true;
    if (record_complete(record)) return true;
  }
  return have_any;  // a final open quote surfaces through split_record
}

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  size_t i = 0;
  const size_t n = line.size();
  while (i < n) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && line[i + 1] == '"') {
          cur.push_back('"');
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        cur.push_back(c);
        ++i;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
      ++i;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      ++i;
    } else {
      cur.push_back(c);
      ++i;
    }
  }
  if (quoted) throw DataError("unterminated quote in CSV record: " + line);
  fields.push_back(std::move(cur));
  return fields;
}

void write_field(std::ostream& out, const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n") != std::string::npos;
  if (!needs_quotes) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

void write_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_field(out, fields[i]);
  }
  out << '\n';
}

}  // namespace fairobnc::csv
