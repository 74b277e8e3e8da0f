#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netsurv/survey_data.hpp"

namespace netsurv {

/// Adapted known-population estimate of the average number of ties from
/// frame members in one group to the whole frame.
struct DegreeEstimate {
  GroupId group;
  double d_bar_hat = 0.0;
  double numerator_hat = 0.0;  // weighted reported connections to the probe alters
  double frame_size = 0.0;     // N_F used
  double group_size = 0.0;     // N_{F_alpha} used
};

struct DeathRateEstimate {
  GroupId group;
  double y_hat = 0.0;      // weighted reports of deaths in the group
  double d_bar_hat = 0.0;  // visibility proxy
  double N_hat = 0.0;      // exposure
  double D_hat = 0.0;      // estimated deaths
  double M_hat = 0.0;      // deaths per person-year
};

enum class GroupStatus { ok, empty_cell, degenerate_visibility };

std::string_view to_string(GroupStatus status);

/// One row of the per-group estimates table. Failing groups carry a status
/// and message instead of an estimate so the other groups stay usable.
struct GroupRate {
  GroupId group;
  GroupStatus status = GroupStatus::ok;
  std::optional<DeathRateEstimate> estimate;
  std::string message;
};

/// Σ_j y_{i,A_j} over the populations of `kp_table` only.
long long kp_connections_to(const RespondentRecord& record, const KnownPopulationTable& kp_table);

/// Number of complete death reports by `record` whose decedent falls in `group`.
long long death_reports_in(const RespondentRecord& record, const GroupId& group, const GroupScheme& scheme);

/// Horvitz-Thompson total of reported deaths in `group`.
double ht_death_reports(std::span<const RespondentRecord> records, const GroupId& group, const GroupScheme& scheme);

/// Adapted known-population estimator. Respondents outside `group` are
/// ignored, so passing the full sample or just s_alpha gives the same answer.
DegreeEstimate kp_average_degree(std::span<const RespondentRecord> records, const GroupId& group,
                                 const GroupScheme& scheme, const KnownPopulationTable& kp_table, double frame_size,
                                 double group_size);

double estimate_deaths(double y_hat, const DegreeEstimate& degree);

/// Σ_{i in s_alpha} w_i. Throws EmptyCellError when nobody is in the group.
double estimate_exposure(std::span<const RespondentRecord> records, const GroupId& group, const GroupScheme& scheme);

/// y_hat / (visibility_hat * N_hat) for any externally supplied visibility.
double network_survival_rate_general(double y_hat, double visibility_hat, double N_hat);

/// Dense, re-weightable view of a sample: everything the network survival
/// estimator needs except the weights. Built once, evaluated per replicate.
class PreparedSample {
 public:
  PreparedSample(std::span<const RespondentRecord> records, const KnownPopulationTable& kp_table,
                 const GroupScheme& scheme);

  std::size_t size() const noexcept { return respondent_group_.size(); }
  const GroupScheme& scheme() const noexcept { return scheme_; }
  double probe_alter_total() const noexcept { return probe_alter_total_; }

  /// Ratio-form estimates for every group. `frame_size` overrides N_F;
  /// otherwise N_F is the sum of `weights`.
  std::vector<GroupRate> rates(std::span<const double> weights, std::optional<double> frame_size = std::nullopt) const;

  /// Death rates only (nullopt for failing groups), for bootstrap replicates.
  std::vector<std::optional<double>> rate_values(std::span<const double> weights,
                                                 std::optional<double> frame_size = std::nullopt) const;

 private:
  GroupScheme scheme_;
  double probe_alter_total_ = 0.0;
  std::vector<int> respondent_group_;     // -1 when outside the scheme
  std::vector<double> kp_total_;          // Σ_j y_{i,A_j}
  std::vector<long long> death_counts_;   // n x G, row-major
};

/// Network survival estimates for every group of `scheme`.
std::vector<GroupRate> network_survival_rate(std::span<const RespondentRecord> records,
                                             const KnownPopulationTable& kp_table, const GroupScheme& scheme,
                                             const FrameTotals& frame_totals);

}  // namespace netsurv
