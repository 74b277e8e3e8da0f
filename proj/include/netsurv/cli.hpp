#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netsurv/bootstrap.hpp"
#include "netsurv/sensitivity.hpp"

namespace netsurv {

/// Runs one subcommand (estimate, sibling, lifetable, bootstrap, sensitivity,
/// simulate, diagnose). `args` excludes the program name. Returns the exit
/// status: 0 on success, 1 for data or configuration errors, 2 for usage errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes `content` to a temporary file beside `path`, then renames it over
/// `path`, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Long table: label, replicate, value (NA for failed replicates).
void write_replicate_table(std::ostream& out, std::span<const EstimateWithCI> results);
/// Reads write_replicate_table output back, keyed by label in first-seen order.
std::vector<std::pair<std::string, std::vector<std::optional<double>>>> read_replicate_table(std::istream& in);

/// Long table: delta, eta_over_tau, group, adjusted_rate, tie_definition.
/// `tie_definitions` is either empty or parallel to `labels`.
void write_grid_table(std::ostream& out, std::span<const GridCell> cells, std::span<const std::string> labels,
                      std::span<const std::string> tie_definitions = {});

struct PlotTables {
  std::vector<EstimateWithCI> bootstrap;
  std::vector<GridCell> grid;
  std::vector<std::string> grid_labels;
  std::vector<std::string> grid_tie_definitions;
};

/// Writes <stem>_replicates.csv and <stem>_grid.csv into `dir` for whichever
/// parts of `results` are present. Returns the files written.
std::vector<std::filesystem::path> emit_plot_tables(const PlotTables& results, const std::filesystem::path& dir,
                                                    const std::string& stem);

}  // namespace netsurv
