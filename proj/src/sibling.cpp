#include "netsurv/sibling.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

#include "netsurv/csv.hpp"
#include "netsurv/errors.hpp"

namespace netsurv {

namespace {

std::optional<bool> parse_alive(std::string_view text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "1" || t == "true" || t == "alive" || t == "yes" || t == "y") return true;
  if (t == "0" || t == "false" || t == "dead" || t == "no" || t == "n") return false;
  return std::nullopt;
}

[[noreturn]] void raise_problems(const std::vector<std::string>& problems) {
  std::ostringstream msg;
  msg << problems.size() << " invalid row(s):";
  const std::size_t shown = std::min<std::size_t>(problems.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) msg << "\n  " << problems[i];
  if (shown < problems.size()) msg << "\n  ...";
  throw ValidationError(msg.str());
}

std::string describe(const SiblingRecord& s) {
  return "respondent " + s.respondent_id + " sibling " + std::to_string(s.sibling_index);
}

}  // namespace

std::vector<SiblingRecord> load_siblings(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const auto c_id = table.require_column("respondent_id");
  const auto c_weight = table.require_column("respondent_weight");
  const auto c_stratum = table.require_column("stratum_id");
  const auto c_psu = table.require_column("psu_id");
  const auto c_index = table.require_column("sibling_index");
  const auto c_sex = table.require_column("sex");
  const auto c_birth = table.require_column("birth_cmc");
  const auto c_alive = table.require_column("alive_flag");
  const auto c_death = table.require_column("death_cmc");
  const auto c_interview = table.find_column("interview_cmc");
  const auto c_self = table.find_column("is_respondent");

  std::vector<SiblingRecord> out;
  out.reserve(table.size());
  std::vector<std::string> problems;
  struct Seen {
    double weight;
    std::string stratum, psu;
  };
  std::unordered_map<std::string, Seen> respondents;
  const std::string file = path.filename().string();
  std::size_t line = 1;
  for (const auto& row : table.rows()) {
    ++line;
    SiblingRecord s;
    s.respondent_id = row[c_id];
    s.stratum_id = row[c_stratum];
    s.psu_id = row[c_psu];
    const std::string where = file + " line " + std::to_string(line) + " (respondent_id " + s.respondent_id + ")";
    if (s.respondent_id.empty()) problems.push_back(where + ": empty respondent_id");

    const auto w = csv::to_double(row[c_weight]);
    if (!w || !(*w > 0.0)) {
      problems.push_back(where + ": respondent_weight must be a positive number, got '" + row[c_weight] + "'");
    } else {
      s.respondent_weight = *w;
    }
    if (const auto k = csv::to_integer(row[c_index])) {
      s.sibling_index = static_cast<int>(*k);
    } else {
      problems.push_back(where + ": sibling_index is not an integer");
    }
    if (const auto sex = parse_sex(row[c_sex])) {
      s.sex = *sex;
    } else {
      problems.push_back(where + ": unrecognised sex '" + row[c_sex] + "'");
    }
    if (const auto b = csv::to_integer(row[c_birth])) {
      s.birth_cmc = static_cast<int>(*b);
    } else {
      problems.push_back(where + ": birth_cmc is not an integer");
    }
    if (const auto alive = parse_alive(row[c_alive])) {
      s.alive = *alive;
    } else {
      problems.push_back(where + ": unrecognised alive_flag '" + row[c_alive] + "'");
    }
    if (!csv::is_missing(row[c_death])) {
      if (const auto d = csv::to_integer(row[c_death])) {
        s.death_cmc = static_cast<int>(*d);
      } else {
        problems.push_back(where + ": death_cmc is not an integer");
      }
    }
    if (c_interview && !csv::is_missing(row[*c_interview])) {
      if (const auto d = csv::to_integer(row[*c_interview])) {
        s.interview_cmc = static_cast<int>(*d);
      } else {
        problems.push_back(where + ": interview_cmc is not an integer");
      }
    }
    if (c_self && !csv::is_missing(row[*c_self])) {
      if (const auto self = parse_alive(row[*c_self])) {
        s.is_respondent = *self;
      } else {
        problems.push_back(where + ": unrecognised is_respondent '" + row[*c_self] + "'");
      }
    }
    auto [it, inserted] = respondents.try_emplace(s.respondent_id, Seen{s.respondent_weight, s.stratum_id, s.psu_id});
    if (!inserted && (it->second.weight != s.respondent_weight || it->second.stratum != s.stratum_id ||
                      it->second.psu != s.psu_id)) {
      problems.push_back(where + ": weight, stratum or PSU differs from an earlier row of the same respondent");
    }
    out.push_back(std::move(s));
  }
  if (!problems.empty()) raise_problems(problems);
  return out;
}

std::vector<PersonPeriod> expand_sibling_histories(std::span<const SiblingRecord> siblings, int window_months,
                                                   const GroupScheme& scheme, std::optional<int> interview_cmc) {
  if (window_months <= 0) throw ArgumentError("window_months must be positive");
  std::vector<PersonPeriod> out;
  std::vector<std::string> problems;
  const auto& breaks = scheme.age_breaks();
  for (const auto& s : siblings) {
    if (s.is_respondent) continue;
    const std::optional<int> interview = s.interview_cmc ? s.interview_cmc : interview_cmc;
    if (!interview) {
      problems.push_back(describe(s) + ": no interview date (add interview_cmc or pass one)");
      continue;
    }
    if (s.alive && s.death_cmc) {
      problems.push_back(describe(s) + ": alive but has a death date");
      continue;
    }
    if (!s.alive && !s.death_cmc) {
      problems.push_back(describe(s) + ": dead without a death date");
      continue;
    }
    if (s.birth_cmc > *interview) {
      problems.push_back(describe(s) + ": born after the interview");
      continue;
    }
    if (s.death_cmc && *s.death_cmc > *interview) {
      problems.push_back(describe(s) + ": death_cmc " + std::to_string(*s.death_cmc) + " is after the interview (" +
                         std::to_string(*interview) + ")");
      continue;
    }
    if (s.death_cmc && *s.death_cmc < s.birth_cmc) {
      problems.push_back(describe(s) + ": death before birth");
      continue;
    }

    const int start = std::max(*interview - window_months, s.birth_cmc);
    const int end = s.death_cmc ? std::min(*interview, *s.death_cmc) : *interview;
    const std::size_t first = out.size();
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const int lo = std::max(start, s.birth_cmc + 12 * breaks[k]);
      const int hi = std::min(end, s.birth_cmc + 12 * breaks[k + 1]);
      if (hi <= lo) continue;
      PersonPeriod p;
      p.respondent_id = s.respondent_id;
      p.sibling_index = s.sibling_index;
      p.group = scheme.assign(breaks[k], s.sex)->index;
      p.exposure_months = hi - lo;
      p.exposure_py = static_cast<double>(hi - lo) / 12.0;
      p.weight = s.respondent_weight;
      out.push_back(std::move(p));
    }
    if (s.death_cmc && *s.death_cmc >= *interview - window_months && *s.death_cmc < *interview) {
      const int age_at_death = (*s.death_cmc - s.birth_cmc) / 12;
      if (const auto g = scheme.assign(age_at_death, s.sex)) {
        auto it = std::find_if(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                               [&](const PersonPeriod& p) { return p.group == g->index; });
        if (it != out.end()) {
          it->death = 1;
        } else {
          // died on the first month of a new bin: an event with no exposure there
          PersonPeriod p;
          p.respondent_id = s.respondent_id;
          p.sibling_index = s.sibling_index;
          p.group = g->index;
          p.death = 1;
          p.weight = s.respondent_weight;
          out.push_back(std::move(p));
        }
      }
    }
  }
  if (!problems.empty()) raise_problems(problems);
  return out;
}

double sibling_survival_rate(std::span<const PersonPeriod> periods, const GroupId& group) {
  double deaths = 0.0;
  double exposure = 0.0;
  for (const auto& p : periods) {
    if (p.group != group.index) continue;
    deaths += p.weight * p.death;
    exposure += p.weight * p.exposure_py;
  }
  if (!(exposure > 0.0)) throw EmptyCellError(group.label(), "no sibling exposure in the window");
  return deaths / exposure;
}

SiblingSample::SiblingSample(std::span<const SiblingRecord> siblings, std::span<const PersonPeriod> periods,
                             const GroupScheme& scheme)
    : scheme_(scheme) {
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : siblings) {
    auto [it, inserted] = index.try_emplace(s.respondent_id, units_.size());
    if (inserted) units_.push_back({s.stratum_id, s.psu_id, s.respondent_weight});
  }
  const std::size_t G = scheme_.group_count();
  deaths_.assign(units_.size() * G, 0.0);
  exposure_.assign(units_.size() * G, 0.0);
  for (const auto& p : periods) {
    const auto it = index.find(p.respondent_id);
    if (it == index.end()) throw ArgumentError("person-period for unknown respondent " + p.respondent_id);
    if (p.group >= G) throw ArgumentError("person-period group index outside the scheme");
    deaths_[it->second * G + p.group] += p.death;
    exposure_[it->second * G + p.group] += p.exposure_py;
  }
}

std::vector<double> SiblingSample::weights() const {
  std::vector<double> w;
  w.reserve(units_.size());
  for (const auto& u : units_) w.push_back(u.weight);
  return w;
}

std::vector<SiblingRate> SiblingSample::rates(std::span<const double> weights) const {
  if (weights.size() != units_.size()) throw ArgumentError("weight vector does not match the number of respondents");
  const std::size_t G = scheme_.group_count();
  std::vector<SiblingRate> out;
  out.reserve(G);
  for (std::size_t g = 0; g < G; ++g) out.push_back({scheme_.group(g), 0.0, 0.0, std::nullopt});
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (weights[i] == 0.0) continue;
    for (std::size_t g = 0; g < G; ++g) {
      out[g].deaths += weights[i] * deaths_[i * G + g];
      out[g].exposure_py += weights[i] * exposure_[i * G + g];
    }
  }
  for (auto& r : out) {
    if (r.exposure_py > 0.0) r.rate = r.deaths / r.exposure_py;
  }
  return out;
}

std::vector<std::optional<double>> SiblingSample::rate_values(std::span<const double> weights) const {
  std::vector<std::optional<double>> out;
  for (const auto& r : rates(weights)) out.push_back(r.rate);
  return out;
}

}  // namespace netsurv
