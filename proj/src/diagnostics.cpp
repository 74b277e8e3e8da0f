#include "netsurv/diagnostics.hpp"

#include "netsurv/errors.hpp"
#include "netsurv/estimators.hpp"
#include "netsurv/parallel.hpp"

namespace netsurv {

DeathsPerInterview deaths_per_interview(std::span<const RespondentRecord> records) {
  if (records.empty()) throw ArgumentError("deaths per interview needs at least one interview");
  DeathsPerInterview out;
  out.interviews = static_cast<long long>(records.size());
  for (const auto& r : records) out.deaths += static_cast<long long>(r.death_reports.size());
  out.ratio = static_cast<double>(out.deaths) / static_cast<double>(out.interviews);
  return out;
}

std::vector<HoldoutPrediction> internal_consistency_holdout(std::span<const RespondentRecord> records,
                                                            const KnownPopulationTable& kp_table) {
  if (kp_table.size() < 2) throw ArgumentError("hold-out checks need at least two known populations");
  const auto& entries = kp_table.entries();
  std::vector<double> y(entries.size(), 0.0);
  for (const auto& r : records) {
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (auto it = r.kp_connections.find(entries[j].name); it != r.kp_connections.end()) {
        y[j] += r.weight * static_cast<double>(it->second);
      }
    }
  }
  double y_all = 0.0;
  for (double v : y) y_all += v;
  std::vector<HoldoutPrediction> out;
  for (std::size_t j = 0; j < entries.size(); ++j) {
    const double rest = y_all - y[j];
    if (!(rest > 0.0)) {
      throw ArgumentError("no reported connections to the populations other than " + entries[j].name);
    }
    const double rest_size = static_cast<double>(kp_table.total() - entries[j].size);
    out.push_back({entries[j].name, y[j] / rest * rest_size, static_cast<double>(entries[j].size)});
  }
  return out;
}

std::vector<LooDegreeRow> loo_degree(std::span<const RespondentRecord> records, const KnownPopulationTable& kp_table,
                                     const GroupScheme& scheme, const FrameTotals& frame_totals) {
  if (kp_table.size() < 2) throw ArgumentError("leave-one-out degrees need at least two known populations");
  const auto groups = scheme.groups();
  const auto& entries = kp_table.entries();
  std::vector<LooDegreeRow> out(groups.size());
  parallel_for(groups.size(), [&](std::size_t g) {
    LooDegreeRow& row = out[g];
    row.group = groups[g];
    row.held_out.assign(entries.size(), std::nullopt);
    double group_size = 0.0;
    try {
      group_size = estimate_exposure(records, groups[g], scheme);
    } catch (const EmptyCellError&) {
      return;
    }
    row.baseline = kp_average_degree(records, groups[g], scheme, kp_table, frame_totals.population, group_size).d_bar_hat;
    for (std::size_t j = 0; j < entries.size(); ++j) {
      const auto reduced = kp_table.without(entries[j].name);
      row.held_out[j] =
          kp_average_degree(records, groups[g], scheme, reduced, frame_totals.population, group_size).d_bar_hat;
    }
  });
  return out;
}

}  // namespace netsurv
