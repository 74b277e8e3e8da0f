#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netsurv/survey_data.hpp"

namespace netsurv {

/// Design information for one sampled unit (a respondent).
struct DesignUnit {
  std::string stratum_id;
  std::string psu_id;
  double weight = 1.0;
};

/// Stratified multi-stage design: strata, their PSUs, and the mapping from
/// every unit to its (stratum, PSU). PSU ids are scoped to their stratum.
class SurveyDesign {
 public:
  struct Stratum {
    std::string id;
    std::vector<std::string> psu_ids;
  };

  static SurveyDesign from_units(std::span<const DesignUnit> units);
  static SurveyDesign from_records(std::span<const RespondentRecord> records);

  std::size_t unit_count() const noexcept { return weights_.size(); }
  const std::vector<Stratum>& strata() const noexcept { return strata_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t unit_stratum(std::size_t unit) const { return unit_stratum_[unit]; }
  /// PSU index within the unit's stratum.
  std::size_t unit_psu(std::size_t unit) const { return unit_psu_[unit]; }

 private:
  std::vector<Stratum> strata_;
  std::vector<double> weights_;
  std::vector<std::size_t> unit_stratum_;
  std::vector<std::size_t> unit_psu_;
};

/// R rescaled-bootstrap weight vectors, stored replicate-major.
class ReplicateWeights {
 public:
  ReplicateWeights(std::size_t replicates, std::size_t units, std::uint64_t seed);

  std::size_t replicate_count() const noexcept { return replicates_; }
  std::size_t unit_count() const noexcept { return units_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::span<const double> replicate(std::size_t r) const { return {values_.data() + r * units_, units_}; }
  std::span<double> replicate(std::size_t r) { return {values_.data() + r * units_, units_}; }

  /// Number of times each PSU was drawn in replicate r, indexed
  /// [stratum][psu within stratum].
  const std::vector<std::vector<int>>& draws(std::size_t r) const { return draws_[r]; }
  std::vector<std::vector<int>>& draws(std::size_t r) { return draws_[r]; }

  bool operator==(const ReplicateWeights&) const = default;

 private:
  std::size_t replicates_;
  std::size_t units_;
  std::uint64_t seed_;
  std::vector<double> values_;
  std::vector<std::vector<std::vector<int>>> draws_;
};

/// Rao-Wu rescaled bootstrap with n_h - 1 PSUs drawn with replacement per
/// stratum: w* = w * n_h/(n_h - 1) * (times the unit's PSU was drawn).
/// Replicate r uses stream_for(seed, r).
/// Throws DesignError for a stratum with a single PSU.
ReplicateWeights make_replicates(const SurveyDesign& design, std::size_t replicates, std::uint64_t seed);

/// Type-7 sample quantile (linear interpolation between order statistics).
double quantile_sorted(std::span<const double> sorted, double p);

/// Equal-tailed percentile interval at `level`.
std::pair<double, double> percentile_interval(std::span<const double> values, double level);

struct EstimateWithCI {
  std::string label;
  std::optional<double> estimate;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  std::vector<std::optional<double>> replicates;
  std::size_t failed_replicates = 0;
  /// More than 10% of replicates failed (e.g. empty cells).
  bool degenerate = false;
};

/// Any estimator that maps a weight vector to one value per output slot;
/// nullopt marks a slot the estimator could not compute.
using WeightedEstimator = std::function<std::vector<std::optional<double>>(std::span<const double>)>;

/// Point estimates from `base_weights`, percentile intervals from the
/// replicates. Replicates are evaluated in parallel; the estimator must be
/// safe to call concurrently.
std::vector<EstimateWithCI> bootstrap_estimate(const WeightedEstimator& estimator, std::span<const double> base_weights,
                                               const ReplicateWeights& replicates, std::vector<std::string> labels,
                                               double level = 0.95);

}  // namespace netsurv
