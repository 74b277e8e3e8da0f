#include "netsurv/survey_data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "netsurv/csv.hpp"
#include "netsurv/errors.hpp"

namespace netsurv {

namespace {

constexpr std::string_view kKpPrefix = "kp_";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

void validate_breaks(const std::vector<int>& breaks) {
  if (breaks.size() < 2) throw ConfigError("age_breaks needs at least 2 entries");
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    if (breaks[i] <= breaks[i - 1]) throw ConfigError("age_breaks must be strictly increasing");
  }
}

void validate_range(const AgeRange& r, std::string_view what) {
  if (r.max_age <= r.min_age) {
    throw ConfigError(std::string(what) + " frame age range is empty: [" + std::to_string(r.min_age) + "," +
                      std::to_string(r.max_age) + ")");
  }
}

}  // namespace

std::string_view to_string(Sex sex) { return sex == Sex::female ? "female" : "male"; }

std::optional<Sex> parse_sex(std::string_view text) {
  const std::string s = lower(text);
  if (s == "female" || s == "f" || s == "2" || s == "woman" || s == "women") return Sex::female;
  if (s == "male" || s == "m" || s == "1" || s == "man" || s == "men") return Sex::male;
  return std::nullopt;
}

std::string GroupId::label() const {
  return std::string(sex == Sex::female ? "F" : "M") + "[" + std::to_string(age_lo) + "," + std::to_string(age_hi) +
         ")";
}

GroupScheme::GroupScheme(std::vector<int> age_breaks) : breaks_(std::move(age_breaks)) {
  validate_breaks(breaks_);
  female_frame_ = male_frame_ = AgeRange{breaks_.front(), breaks_.back()};
}

GroupScheme::GroupScheme(std::vector<int> age_breaks, AgeRange female_frame, AgeRange male_frame)
    : breaks_(std::move(age_breaks)), female_frame_(female_frame), male_frame_(male_frame) {
  validate_breaks(breaks_);
  validate_range(female_frame_, "female");
  validate_range(male_frame_, "male");
}

std::optional<GroupId> GroupScheme::assign(int age, Sex sex) const {
  if (age < breaks_.front() || age >= breaks_.back()) return std::nullopt;
  // upper_bound gives the first break strictly greater than age, so an age on
  // a break belongs to the bin that starts there.
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), age);
  const auto bin = static_cast<std::size_t>(it - breaks_.begin()) - 1;
  return group((sex == Sex::female ? 0 : bin_count()) + bin);
}

GroupId GroupScheme::group(std::size_t index) const {
  if (index >= group_count()) throw ArgumentError("group index " + std::to_string(index) + " out of range");
  const std::size_t bin = index % bin_count();
  return GroupId{index < bin_count() ? Sex::female : Sex::male, breaks_[bin], breaks_[bin + 1], index};
}

std::vector<GroupId> GroupScheme::groups() const {
  std::vector<GroupId> out;
  out.reserve(group_count());
  for (std::size_t g = 0; g < group_count(); ++g) out.push_back(group(g));
  return out;
}

std::optional<GroupId> GroupScheme::find(std::string_view label) const {
  for (std::size_t g = 0; g < group_count(); ++g) {
    GroupId id = group(g);
    if (id.label() == label) return id;
  }
  return std::nullopt;
}

std::optional<GroupId> assign_group(int age, Sex sex, const GroupScheme& scheme) { return scheme.assign(age, sex); }

long long RespondentRecord::kp_total() const {
  long long total = 0;
  for (const auto& [name, count] : kp_connections) total += count;
  return total;
}

KnownPopulationTable::KnownPopulationTable(std::vector<KnownPopulation> entries) : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.name.empty()) throw ConfigError("known population with empty name");
    if (!seen.insert(e.name).second) throw ConfigError("duplicate known population '" + e.name + "'");
    if (e.size <= 0) throw ConfigError("known population '" + e.name + "' has non-positive size");
    total_ += e.size;
  }
}

bool KnownPopulationTable::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.name == name; });
}

const KnownPopulation& KnownPopulationTable::at(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw ArgumentError("unknown known population '" + std::string(name) + "'");
}

KnownPopulationTable KnownPopulationTable::without(std::string_view name) const {
  at(name);
  std::vector<KnownPopulation> rest;
  for (const auto& e : entries_) {
    if (e.name != name) rest.push_back(e);
  }
  return KnownPopulationTable(std::move(rest));
}

SurveyTable load_respondents(const std::filesystem::path& respondents,
                             const std::optional<std::filesystem::path>& deaths,
                             const KnownPopulationTable* kp_table) {
  const csv::Table table = csv::read(respondents);
  const std::size_t c_id = table.require_column("respondent_id");
  const std::size_t c_stratum = table.require_column("stratum_id");
  const std::size_t c_psu = table.require_column("psu_id");
  const std::size_t c_weight = table.require_column("weight");
  const std::size_t c_age = table.require_column("age");
  const std::size_t c_sex = table.require_column("sex");
  const std::size_t c_tie = table.require_column("tie_definition");

  // Known-population columns: name -> column index.
  std::vector<std::pair<std::string, std::size_t>> kp_columns;
  SurveyTable out;
  if (kp_table) {
    for (const auto& e : kp_table->entries()) {
      kp_columns.emplace_back(e.name, table.require_column(std::string(kKpPrefix) + e.name));
    }
  }
  for (std::size_t c = 0; c < table.header().size(); ++c) {
    const std::string& h = table.header()[c];
    if (h.rfind(kKpPrefix, 0) != 0) continue;
    const std::string name = h.substr(kKpPrefix.size());
    if (!kp_table) {
      kp_columns.emplace_back(name, c);
    } else if (!kp_table->contains(name)) {
      out.report.ignored_kp_columns.push_back(h);
    }
  }

  std::vector<std::string> problems;
  std::unordered_map<std::string, std::size_t> by_id;
  out.records.reserve(table.size());
  std::size_t line = 1;
  for (const auto& row : table.rows()) {
    ++line;
    RespondentRecord r;
    r.respondent_id = row[c_id];
    r.stratum_id = row[c_stratum];
    r.psu_id = row[c_psu];
    r.tie_definition = row[c_tie];
    const std::string where = respondents.filename().string() + " line " + std::to_string(line) + " (respondent_id " +
                              r.respondent_id + ")";
    if (r.respondent_id.empty()) problems.push_back(where + ": empty respondent_id");
    const auto w = csv::to_double(row[c_weight]);
    if (!w) {
      problems.push_back(where + ": weight is not a number");
    } else if (!(*w > 0.0)) {
      problems.push_back(where + ": weight must be positive, got " + row[c_weight]);
    } else {
      r.weight = *w;
    }
    const auto age = csv::to_integer(row[c_age]);
    if (!age) {
      problems.push_back(where + ": age is not an integer");
    } else {
      r.age = static_cast<int>(*age);
    }
    const auto sex = parse_sex(row[c_sex]);
    if (!sex) {
      problems.push_back(where + ": unrecognised sex '" + row[c_sex] + "'");
    } else {
      r.sex = *sex;
    }
    for (const auto& [name, col] : kp_columns) {
      if (csv::is_missing(row[col])) {
        ++out.report.missing_kp_values;
        r.kp_connections[name] = 0;
        continue;
      }
      const auto v = csv::to_integer(row[col]);
      if (!v || *v < 0) {
        problems.push_back(where + ": kp_" + name + " must be a non-negative integer, got '" + row[col] + "'");
        continue;
      }
      r.kp_connections[name] = *v;
    }
    if (!by_id.emplace(r.respondent_id, out.records.size()).second) {
      problems.push_back(where + ": duplicate respondent_id");
    }
    out.records.push_back(std::move(r));
  }

  if (deaths) {
    const csv::Table dt = csv::read(*deaths);
    const std::size_t d_id = dt.require_column("respondent_id");
    const std::size_t d_age = dt.require_column("death_age");
    const std::size_t d_sex = dt.require_column("death_sex");
    std::size_t dline = 1;
    for (const auto& row : dt.rows()) {
      ++dline;
      const auto it = by_id.find(row[d_id]);
      const std::string where = deaths->filename().string() + " line " + std::to_string(dline);
      if (it == by_id.end()) {
        problems.push_back(where + ": unknown respondent_id '" + row[d_id] + "'");
        continue;
      }
      RespondentRecord& r = out.records[it->second];
      DeathReport report;
      report.count_context = r.tie_definition;
      if (!csv::is_missing(row[d_age])) {
        const auto a = csv::to_integer(row[d_age]);
        if (!a || *a < 0) {
          problems.push_back(where + ": death_age must be a non-negative integer, got '" + row[d_age] + "'");
          continue;
        }
        report.death_age = static_cast<int>(*a);
      }
      if (!csv::is_missing(row[d_sex])) {
        report.death_sex = parse_sex(row[d_sex]);
        if (!report.death_sex) {
          problems.push_back(where + ": unrecognised death_sex '" + row[d_sex] + "'");
          continue;
        }
      }
      ++out.report.death_reports;
      if (!report.complete()) ++out.report.incomplete_death_reports;
      r.death_reports.push_back(std::move(report));
    }
  }

  if (!problems.empty()) {
    std::ostringstream msg;
    msg << problems.size() << " invalid row(s):";
    const std::size_t shown = std::min<std::size_t>(problems.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg << "\n  " << problems[i];
    if (shown < problems.size()) msg << "\n  ...";
    throw ValidationError(msg.str());
  }
  out.report.respondents = out.records.size();
  return out;
}

KnownPopulationTable load_known_populations(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const std::size_t c_name = table.require_column("name");
  const std::size_t c_size = table.require_column("size");
  std::vector<KnownPopulation> entries;
  std::size_t line = 1;
  for (const auto& row : table.rows()) {
    ++line;
    const auto size = csv::to_integer(row[c_size]);
    if (!size) {
      throw ValidationError(path.filename().string() + " line " + std::to_string(line) + ": size '" + row[c_size] +
                            "' is not an integer");
    }
    entries.push_back({row[c_name], *size});
  }
  return KnownPopulationTable(std::move(entries));
}

void write_respondents(std::ostream& out, std::span<const RespondentRecord> records,
                       const KnownPopulationTable& kp_table) {
  std::vector<std::string> header{"respondent_id", "stratum_id", "psu_id", "weight", "age", "sex", "tie_definition"};
  for (const auto& e : kp_table.entries()) header.push_back(std::string(kKpPrefix) + e.name);
  csv::write_row(out, header);
  for (const auto& r : records) {
    std::vector<std::string> row{r.respondent_id,        r.stratum_id,           r.psu_id,
                                 csv::format_double(r.weight), std::to_string(r.age), std::string(to_string(r.sex)),
                                 r.tie_definition};
    for (const auto& e : kp_table.entries()) {
      const auto it = r.kp_connections.find(e.name);
      row.push_back(it == r.kp_connections.end() ? "NA" : std::to_string(it->second));
    }
    csv::write_row(out, row);
  }
}

void write_deaths(std::ostream& out, std::span<const RespondentRecord> records) {
  csv::write_row(out, {"respondent_id", "death_age", "death_sex"});
  for (const auto& r : records) {
    for (const auto& d : r.death_reports) {
      csv::write_row(out, {r.respondent_id, d.death_age ? std::to_string(*d.death_age) : "",
                           d.death_sex ? std::string(to_string(*d.death_sex)) : ""});
    }
  }
}

void write_known_populations(std::ostream& out, const KnownPopulationTable& kp_table) {
  csv::write_row(out, {"name", "size"});
  for (const auto& e : kp_table.entries()) csv::write_row(out, {e.name, std::to_string(e.size)});
}

std::vector<RespondentRecord> topcode_kp_reports(std::vector<RespondentRecord> records, long long cap) {
  if (cap < 0) throw ArgumentError("topcode cap must be non-negative");
  for (auto& r : records) {
    for (auto& [name, count] : r.kp_connections) count = std::min(count, cap);
  }
  return records;
}

std::vector<RespondentRecord> denormalize_weights(std::vector<RespondentRecord> records, double target_population) {
  if (!(target_population > 0.0)) throw ArgumentError("target population total must be positive");
  double total = 0.0;
  for (const auto& r : records) total += r.weight;
  if (!(total > 0.0)) throw ArgumentError("sum of weights must be positive to de-normalize");
  if (total == target_population) return records;
  const double scale = target_population / total;
  for (auto& r : records) r.weight *= scale;
  return records;
}

std::vector<RespondentRecord> truncate_frame(std::vector<RespondentRecord> records, const FrameRule& rule) {
  std::erase_if(records, [&](const RespondentRecord& r) { return !rule.range(r.sex).contains(r.age); });
  return records;
}

std::vector<RespondentRecord> filter_tie_definition(std::vector<RespondentRecord> records,
                                                    std::string_view tie_definition) {
  std::erase_if(records, [&](const RespondentRecord& r) { return r.tie_definition != tie_definition; });
  return records;
}

FrameTotals frame_totals(std::span<const RespondentRecord> records, std::optional<double> configured) {
  if (configured) {
    if (!(*configured > 0.0)) throw ConfigError("population_total must be positive");
    return {*configured, FrameTotals::Source::config};
  }
  double total = 0.0;
  for (const auto& r : records) total += r.weight;
  if (!(total > 0.0)) throw ArgumentError("cannot estimate frame size from an empty or zero-weight sample");
  return {total, FrameTotals::Source::estimated_from_weights};
}

std::vector<double> weights_of(std::span<const RespondentRecord> records) {
  std::vector<double> w;
  w.reserve(records.size());
  for (const auto& r : records) w.push_back(r.weight);
  return w;
}

EstimationConfig parse_estimation_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    std::vector<int> breaks = j.value("age_breaks", std::vector<int>{15, 25, 35, 45, 55, 65});
    validate_breaks(breaks);
    AgeRange female{breaks.front(), breaks.back()};
    AgeRange male = female;
    if (j.contains("frame_age_range")) {
      const auto& fr = j.at("frame_age_range");
      auto read_range = [&](const char* key, AgeRange& r) {
        if (!fr.contains(key)) return;
        const auto v = fr.at(key).get<std::vector<int>>();
        if (v.size() != 2) throw ConfigError(std::string("frame_age_range.") + key + " must be [min, max)");
        r = {v[0], v[1]};
      };
      read_range("female", female);
      read_range("male", male);
    }
    EstimationConfig cfg{GroupScheme(std::move(breaks), female, male)};
    if (j.contains("topcode_cap")) {
      if (j.at("topcode_cap").is_null()) {
        cfg.topcode_cap.reset();
      } else {
        cfg.topcode_cap = j.at("topcode_cap").get<long long>();
        if (*cfg.topcode_cap < 0) throw ConfigError("topcode_cap must be non-negative");
      }
    }
    if (j.contains("population_total") && !j.at("population_total").is_null()) {
      cfg.population_total = j.at("population_total").get<double>();
      if (!(*cfg.population_total > 0.0)) throw ConfigError("population_total must be positive");
    }
    if (j.contains("tie_definition") && !j.at("tie_definition").is_null()) {
      cfg.tie_definition = j.at("tie_definition").get<std::string>();
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

EstimationConfig load_estimation_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_estimation_config(ss.str());
}

}  // namespace netsurv
