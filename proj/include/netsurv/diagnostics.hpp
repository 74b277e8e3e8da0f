#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netsurv/survey_data.hpp"

namespace netsurv {

struct DeathsPerInterview {
  long long deaths = 0;  // complete and incomplete reports
  long long interviews = 0;
  double ratio = 0.0;
};

/// Unweighted. Throws ArgumentError for an empty sample.
DeathsPerInterview deaths_per_interview(std::span<const RespondentRecord> records);

struct HoldoutPrediction {
  std::string population;
  double predicted = 0.0;
  double known_size = 0.0;
};

/// Predicts each known population's size from the others:
/// N̂_{A_j} = ŷ_{F,A_j} / ŷ_{F,𝒜∖j} × N_{𝒜∖j}. Invariant to the scale of the
/// weights. Needs at least two populations.
std::vector<HoldoutPrediction> internal_consistency_holdout(std::span<const RespondentRecord> records,
                                                            const KnownPopulationTable& kp_table);

struct LooDegreeRow {
  GroupId group;
  std::optional<double> baseline;               // every population used
  std::vector<std::optional<double>> held_out;  // one per population, table order
};

/// Adapted known-population degree per group with each population removed in
/// turn. Groups without respondents get empty entries.
std::vector<LooDegreeRow> loo_degree(std::span<const RespondentRecord> records, const KnownPopulationTable& kp_table,
                                     const GroupScheme& scheme, const FrameTotals& frame_totals);

}  // namespace netsurv
