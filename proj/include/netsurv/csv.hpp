#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace netsurv::csv {

/// A parsed CSV file with a header row. Fields are kept as strings; callers
/// convert with the helpers below so that error messages can name the column.
class Table {
 public:
  Table() = default;
  Table(std::string source, std::vector<std::string> header, std::vector<std::vector<std::string>> rows);

  const std::string& source() const noexcept { return source_; }
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  std::optional<std::size_t> find_column(std::string_view name) const;
  /// Throws SchemaError naming the column and the file when absent.
  std::size_t require_column(std::string_view name) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

Table parse(std::istream& in, std::string source = "<stream>");
Table read(const std::filesystem::path& path);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trippable decimal representation of a double.
std::string format_double(double value);

bool is_missing(std::string_view field);
std::optional<double> to_double(std::string_view field);
std::optional<long long> to_integer(std::string_view field);

}  // namespace netsurv::csv
