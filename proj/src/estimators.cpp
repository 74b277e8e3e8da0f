#include "netsurv/estimators.hpp"

#include <cmath>

#include "netsurv/errors.hpp"

namespace netsurv {

std::string_view to_string(GroupStatus status) {
  switch (status) {
    case GroupStatus::ok:
      return "ok";
    case GroupStatus::empty_cell:
      return "empty_cell";
    case GroupStatus::degenerate_visibility:
      return "degenerate_visibility";
  }
  return "unknown";
}

long long kp_connections_to(const RespondentRecord& record, const KnownPopulationTable& kp_table) {
  long long total = 0;
  for (const auto& e : kp_table.entries()) {
    if (auto it = record.kp_connections.find(e.name); it != record.kp_connections.end()) total += it->second;
  }
  return total;
}

long long death_reports_in(const RespondentRecord& record, const GroupId& group, const GroupScheme& scheme) {
  long long n = 0;
  for (const auto& d : record.death_reports) {
    if (!d.complete()) continue;
    if (auto g = scheme.assign(*d.death_age, *d.death_sex); g && g->index == group.index) ++n;
  }
  return n;
}

double ht_death_reports(std::span<const RespondentRecord> records, const GroupId& group, const GroupScheme& scheme) {
  double total = 0.0;
  for (const auto& r : records) {
    if (const long long y = death_reports_in(r, group, scheme)) total += static_cast<double>(y) * r.weight;
  }
  return total;
}

DegreeEstimate kp_average_degree(std::span<const RespondentRecord> records, const GroupId& group,
                                 const GroupScheme& scheme, const KnownPopulationTable& kp_table, double frame_size,
                                 double group_size) {
  if (kp_table.total() <= 0) throw ConfigError("known population total is zero; cannot estimate degree");
  if (!(frame_size > 0.0) || !(group_size > 0.0)) throw ArgumentError("N_F and N_F_alpha must be positive");
  double numerator = 0.0;
  bool any = false;
  for (const auto& r : records) {
    auto g = scheme.assign(r.age, r.sex);
    if (!g || g->index != group.index) continue;
    any = true;
    numerator += static_cast<double>(kp_connections_to(r, kp_table)) * r.weight;
  }
  if (!any) throw EmptyCellError(group.label(), "no respondents in group");
  const double n_a = static_cast<double>(kp_table.total());
  return DegreeEstimate{group, (numerator / n_a) * (frame_size / group_size), numerator, frame_size, group_size};
}

double estimate_deaths(double y_hat, const DegreeEstimate& degree) {
  if (!(degree.d_bar_hat > 0.0)) throw DegenerateVisibilityError(degree.group.label());
  return y_hat / degree.d_bar_hat;
}

double estimate_exposure(std::span<const RespondentRecord> records, const GroupId& group, const GroupScheme& scheme) {
  double total = 0.0;
  bool any = false;
  for (const auto& r : records) {
    auto g = scheme.assign(r.age, r.sex);
    if (!g || g->index != group.index) continue;
    any = true;
    total += r.weight;
  }
  if (!any) throw EmptyCellError(group.label(), "no respondents in group");
  return total;
}

double network_survival_rate_general(double y_hat, double visibility_hat, double N_hat) {
  if (!(visibility_hat > 0.0)) throw ArgumentError("visibility estimate must be positive");
  if (!(N_hat > 0.0)) throw ArgumentError("exposure estimate must be positive");
  return y_hat / (visibility_hat * N_hat);
}

PreparedSample::PreparedSample(std::span<const RespondentRecord> records, const KnownPopulationTable& kp_table,
                               const GroupScheme& scheme)
    : scheme_(scheme), probe_alter_total_(static_cast<double>(kp_table.total())) {
  if (kp_table.total() <= 0) throw ConfigError("known population total is zero; cannot estimate degree");
  const std::size_t n_groups = scheme_.group_count();
  respondent_group_.reserve(records.size());
  kp_total_.reserve(records.size());
  death_counts_.assign(records.size() * n_groups, 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto g = scheme_.assign(r.age, r.sex);
    respondent_group_.push_back(g ? static_cast<int>(g->index) : -1);
    kp_total_.push_back(static_cast<double>(kp_connections_to(r, kp_table)));
    for (const auto& d : r.death_reports) {
      if (!d.complete()) continue;
      if (auto dg = scheme_.assign(*d.death_age, *d.death_sex)) ++death_counts_[i * n_groups + dg->index];
    }
  }
}

std::vector<GroupRate> PreparedSample::rates(std::span<const double> weights, std::optional<double> frame_size) const {
  if (weights.size() != size()) throw ArgumentError("weight vector does not match the sample size");
  const std::size_t n_groups = scheme_.group_count();
  std::vector<double> y_hat(n_groups, 0.0);
  std::vector<double> kp_hat(n_groups, 0.0);
  std::vector<double> exposure(n_groups, 0.0);
  std::vector<std::size_t> count(n_groups, 0);
  double weight_total = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double w = weights[i];
    weight_total += w;
    const long long* deaths = &death_counts_[i * n_groups];
    for (std::size_t g = 0; g < n_groups; ++g) {
      if (deaths[g]) y_hat[g] += static_cast<double>(deaths[g]) * w;
    }
    if (const int g = respondent_group_[i]; g >= 0) {
      kp_hat[g] += kp_total_[i] * w;
      exposure[g] += w;
      ++count[g];
    }
  }
  const double n_f = frame_size.value_or(weight_total);

  std::vector<GroupRate> out;
  out.reserve(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    GroupRate row{scheme_.group(g)};
    if (count[g] == 0 || !(exposure[g] > 0.0)) {
      row.status = GroupStatus::empty_cell;
      row.message = "no respondents (or zero total weight) in group " + row.group.label();
    } else if (!(kp_hat[g] > 0.0) || !(n_f > 0.0)) {
      row.status = GroupStatus::degenerate_visibility;
      row.message = "no reported connections to known populations in group " + row.group.label();
    } else {
      DeathRateEstimate est{row.group};
      est.y_hat = y_hat[g];
      est.N_hat = exposure[g];
      est.d_bar_hat = (kp_hat[g] / probe_alter_total_) * (n_f / exposure[g]);
      est.D_hat = y_hat[g] / est.d_bar_hat;
      // Ratio form: the exposure cancels against N_{F_alpha} inside the
      // degree estimate, leaving an estimate invariant to weight scale.
      est.M_hat = (y_hat[g] / kp_hat[g]) * (probe_alter_total_ / n_f);
      row.estimate = est;
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::optional<double>> PreparedSample::rate_values(std::span<const double> weights,
                                                               std::optional<double> frame_size) const {
  std::vector<std::optional<double>> out;
  for (const auto& row : rates(weights, frame_size)) {
    out.push_back(row.estimate ? std::optional<double>(row.estimate->M_hat) : std::nullopt);
  }
  return out;
}

std::vector<GroupRate> network_survival_rate(std::span<const RespondentRecord> records,
                                             const KnownPopulationTable& kp_table, const GroupScheme& scheme,
                                             const FrameTotals& frame_totals) {
  const PreparedSample prepared(records, kp_table, scheme);
  const std::vector<double> w = weights_of(records);
  return prepared.rates(w, frame_totals.population);
}

}  // namespace netsurv
