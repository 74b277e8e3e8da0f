#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netsurv/bootstrap.hpp"
#include "netsurv/estimators.hpp"
#include "netsurv/survey_data.hpp"

namespace netsurv {

// Dates are DHS century-month codes (CMC): months since December 1899, so
// January 1900 is 1. Every event is placed in the middle of its month, which
// makes all date differences whole months.

struct SiblingRecord {
  std::string respondent_id;
  double respondent_weight = 1.0;
  std::string stratum_id;
  std::string psu_id;
  int sibling_index = 0;
  Sex sex = Sex::female;
  int birth_cmc = 0;
  bool alive = true;
  std::optional<int> death_cmc;
  /// Per-row interview date; falls back to the date passed to the expander.
  std::optional<int> interview_cmc;
  /// Rows describing the respondent are skipped by the expander.
  bool is_respondent = false;
};

/// One sibling's contribution to one group within the reference window.
struct PersonPeriod {
  std::string respondent_id;
  int sibling_index = 0;
  std::size_t group = 0;  // index into the scheme
  int exposure_months = 0;
  double exposure_py = 0.0;
  int death = 0;
  double weight = 1.0;
};

/// Loads siblings.csv. Columns: respondent_id, respondent_weight, stratum_id,
/// psu_id, sibling_index, sex, birth_cmc, alive_flag, death_cmc, and the
/// optional interview_cmc and is_respondent.
std::vector<SiblingRecord> load_siblings(const std::filesystem::path& path);

/// Splits each sibling's time alive inside [interview - window, interview)
/// across the age bins of `scheme`. Exposure outside the scheme's ages is
/// dropped. A death in the window adds one event to the bin of age at death.
/// Throws ValidationError for a death after the interview, a death before
/// birth, or a row without any interview date.
std::vector<PersonPeriod> expand_sibling_histories(std::span<const SiblingRecord> siblings, int window_months,
                                                   const GroupScheme& scheme,
                                                   std::optional<int> interview_cmc = std::nullopt);

/// Σ w·D / Σ w·N over the person-periods of `group`.
/// Throws EmptyCellError when the group has no exposure.
double sibling_survival_rate(std::span<const PersonPeriod> periods, const GroupId& group);

struct SiblingRate {
  GroupId group;
  double deaths = 0.0;       // Σ w·D
  double exposure_py = 0.0;  // Σ w·N
  std::optional<double> rate;  // empty when the group has no exposure
};

/// Respondent-level totals of deaths and exposure per group, so the rates can
/// be recomputed under replicate weights.
class SiblingSample {
 public:
  SiblingSample(std::span<const SiblingRecord> siblings, std::span<const PersonPeriod> periods,
                const GroupScheme& scheme);

  const GroupScheme& scheme() const noexcept { return scheme_; }
  /// One design unit per respondent, in first-appearance order.
  const std::vector<DesignUnit>& units() const noexcept { return units_; }
  std::vector<double> weights() const;

  std::vector<std::optional<double>> rate_values(std::span<const double> weights) const;
  /// Per-group weighted totals and rates.
  std::vector<SiblingRate> rates(std::span<const double> weights) const;

 private:
  GroupScheme scheme_;
  std::vector<DesignUnit> units_;
  std::vector<double> deaths_;    // respondents x groups
  std::vector<double> exposure_;  // respondents x groups, person-years
};

}  // namespace netsurv
