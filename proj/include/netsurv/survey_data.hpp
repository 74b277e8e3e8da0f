#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace netsurv {

enum class Sex { female, male };

inline constexpr Sex kSexes[] = {Sex::female, Sex::male};

std::string_view to_string(Sex sex);
/// Accepts female/male, f/m (any case) and the DHS numeric codes 2/1.
std::optional<Sex> parse_sex(std::string_view text);

/// Half-open age interval [min_age, max_age).
struct AgeRange {
  int min_age = 0;
  int max_age = 0;

  bool contains(int age) const noexcept { return age >= min_age && age < max_age; }
  bool operator==(const AgeRange&) const = default;
};

/// Per-sex frame membership rule, e.g. women [15,50) and men [15,60).
struct FrameRule {
  AgeRange female;
  AgeRange male;

  const AgeRange& range(Sex sex) const noexcept { return sex == Sex::female ? female : male; }
  static FrameRule dhs() { return {{15, 50}, {15, 60}}; }
};

/// An (age bin, sex) demographic cell. `index` is dense within its scheme:
/// females first, then males, bins in increasing age.
struct GroupId {
  Sex sex = Sex::female;
  int age_lo = 0;
  int age_hi = 0;
  std::size_t index = 0;

  /// e.g. "F[25,35)".
  std::string label() const;
  bool operator==(const GroupId&) const = default;
};

/// Partition of ages [first break, last break) x {female, male} into groups,
/// plus the per-sex frame rule used to filter respondents.
class GroupScheme {
 public:
  explicit GroupScheme(std::vector<int> age_breaks);
  GroupScheme(std::vector<int> age_breaks, AgeRange female_frame, AgeRange male_frame);

  const std::vector<int>& age_breaks() const noexcept { return breaks_; }
  std::size_t bin_count() const noexcept { return breaks_.size() - 1; }
  std::size_t group_count() const noexcept { return 2 * bin_count(); }
  int min_age() const noexcept { return breaks_.front(); }
  int max_age() const noexcept { return breaks_.back(); }

  AgeRange frame_age_range(Sex sex) const noexcept { return sex == Sex::female ? female_frame_ : male_frame_; }
  FrameRule frame_rule() const noexcept { return {female_frame_, male_frame_}; }

  std::optional<GroupId> assign(int age, Sex sex) const;
  GroupId group(std::size_t index) const;
  std::vector<GroupId> groups() const;
  std::optional<GroupId> find(std::string_view label) const;

 private:
  std::vector<int> breaks_;
  AgeRange female_frame_;
  AgeRange male_frame_;
};

/// Out-of-range inputs return std::nullopt.
std::optional<GroupId> assign_group(int age, Sex sex, const GroupScheme& scheme);

struct DeathReport {
  std::optional<int> death_age;
  std::optional<Sex> death_sex;
  std::string count_context;

  bool complete() const noexcept { return death_age.has_value() && death_sex.has_value(); }
};

struct RespondentRecord {
  std::string respondent_id;
  std::string stratum_id;
  std::string psu_id;
  double weight = 1.0;
  int age = 0;
  Sex sex = Sex::female;
  std::string tie_definition;
  std::vector<DeathReport> death_reports;
  std::map<std::string, long long> kp_connections;

  /// Sum of reported connections over every known population.
  long long kp_total() const;
};

struct KnownPopulation {
  std::string name;
  long long size = 0;
};

/// The probe-alter multiset: known populations with their sizes.
class KnownPopulationTable {
 public:
  KnownPopulationTable() = default;
  explicit KnownPopulationTable(std::vector<KnownPopulation> entries);

  const std::vector<KnownPopulation>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  /// N_𝒜, the total size of the probe alters.
  long long total() const noexcept { return total_; }
  bool contains(std::string_view name) const;
  const KnownPopulation& at(std::string_view name) const;
  /// The table with one population removed (used by hold-out diagnostics).
  KnownPopulationTable without(std::string_view name) const;

 private:
  std::vector<KnownPopulation> entries_;
  long long total_ = 0;
};

struct FrameTotals {
  enum class Source { config, estimated_from_weights };
  double population = 0.0;
  Source source = Source::estimated_from_weights;
};

struct LoadReport {
  std::size_t respondents = 0;
  std::size_t death_reports = 0;
  std::size_t incomplete_death_reports = 0;
  std::size_t missing_kp_values = 0;
  std::vector<std::string> ignored_kp_columns;
};

struct SurveyTable {
  std::vector<RespondentRecord> records;
  LoadReport report;
};

/// Loads respondents.csv (and optionally the long-format deaths.csv). When a
/// known-population table is given, every population must have a `kp_<name>`
/// column; other `kp_` columns are ignored and listed in the report.
SurveyTable load_respondents(const std::filesystem::path& respondents,
                             const std::optional<std::filesystem::path>& deaths,
                             const KnownPopulationTable* kp_table = nullptr);

KnownPopulationTable load_known_populations(const std::filesystem::path& path);

/// Writers for the same three schemas, so generated data can be read back.
void write_respondents(std::ostream& out, std::span<const RespondentRecord> records,
                       const KnownPopulationTable& kp_table);
void write_deaths(std::ostream& out, std::span<const RespondentRecord> records);
void write_known_populations(std::ostream& out, const KnownPopulationTable& kp_table);

std::vector<RespondentRecord> topcode_kp_reports(std::vector<RespondentRecord> records, long long cap = 30);

/// Rescales weights so that they sum to `target_population`.
std::vector<RespondentRecord> denormalize_weights(std::vector<RespondentRecord> records, double target_population);

std::vector<RespondentRecord> truncate_frame(std::vector<RespondentRecord> records, const FrameRule& rule);

std::vector<RespondentRecord> filter_tie_definition(std::vector<RespondentRecord> records,
                                                    std::string_view tie_definition);

/// N_F: the configured total when given, otherwise the sum of weights.
FrameTotals frame_totals(std::span<const RespondentRecord> records, std::optional<double> configured = std::nullopt);

std::vector<double> weights_of(std::span<const RespondentRecord> records);

/// Settings read from the JSON config file.
struct EstimationConfig {
  GroupScheme scheme{{15, 25, 35, 45, 55, 65}};
  /// null in the JSON disables topcoding.
  std::optional<long long> topcode_cap = 30;
  std::optional<double> population_total;
  std::optional<std::string> tie_definition;
};

EstimationConfig parse_estimation_config(std::string_view json_text);
EstimationConfig load_estimation_config(const std::filesystem::path& path);

}  // namespace netsurv
