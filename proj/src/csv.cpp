#include "netsurv/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "netsurv/errors.hpp"

namespace netsurv::csv {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Reads one logical record, honouring quoted fields that span lines.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_no;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (quoted) {
        field.push_back('\n');
        if (!std::getline(in, line)) throw SchemaError("unterminated quoted field at line " + std::to_string(line_no));
        ++line_no;
        i = 0;
        continue;
      }
      break;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
    ++i;
  }
  fields.push_back(was_quoted ? field : trim(field));
  return true;
}

}  // namespace

Table::Table(std::string source, std::vector<std::string> header, std::vector<std::vector<std::string>> rows)
    : source_(std::move(source)), header_(std::move(header)), rows_(std::move(rows)) {}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  if (auto idx = find_column(name)) return *idx;
  throw SchemaError(source_ + ": missing required column '" + std::string(name) + "'");
}

Table parse(std::istream& in, std::string source) {
  std::vector<std::string> header;
  std::size_t line_no = 0;
  if (!read_record(in, header, line_no)) throw SchemaError(source + ": empty file (no header row)");
  if (!header.empty() && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0) {
    header[0].erase(0, 3);
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  while (read_record(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size()) {
      throw SchemaError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(header.size()));
    }
    rows.push_back(fields);
  }
  return Table(std::move(source), std::move(header), std::move(rows));
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  return parse(in, path.string());
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") != std::string::npos) {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool is_missing(std::string_view field) {
  return field.empty() || field == "NA" || field == "na" || field == "NaN" || field == ".";
}

std::optional<double> to_double(std::string_view field) {
  if (is_missing(field)) return std::nullopt;
  std::string s(field);
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double v = 0.0;
  is >> v;
  if (is.fail()) return std::nullopt;
  is >> std::ws;
  if (!is.eof()) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(std::string_view field) {
  if (is_missing(field)) return std::nullopt;
  long long v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec == std::errc() && res.ptr == field.data() + field.size()) return v;
  // Accept integral values written as reals, e.g. "12.0".
  if (auto d = to_double(field); d && std::floor(*d) == *d && std::abs(*d) < 9e15) {
    return static_cast<long long>(*d);
  }
  return std::nullopt;
}

}  // namespace netsurv::csv
