#include "netsurv/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "netsurv/errors.hpp"
#include "netsurv/parallel.hpp"
#include "netsurv/rng.hpp"

namespace netsurv {

SurveyDesign SurveyDesign::from_units(std::span<const DesignUnit> units) {
  SurveyDesign d;
  std::map<std::string, std::size_t> stratum_index;
  std::vector<std::map<std::string, std::size_t>> psu_index;
  d.weights_.reserve(units.size());
  for (const auto& u : units) {
    auto [sit, s_new] = stratum_index.try_emplace(u.stratum_id, d.strata_.size());
    if (s_new) {
      d.strata_.push_back({u.stratum_id, {}});
      psu_index.emplace_back();
    }
    const std::size_t s = sit->second;
    auto [pit, p_new] = psu_index[s].try_emplace(u.psu_id, d.strata_[s].psu_ids.size());
    if (p_new) d.strata_[s].psu_ids.push_back(u.psu_id);
    d.unit_stratum_.push_back(s);
    d.unit_psu_.push_back(pit->second);
    d.weights_.push_back(u.weight);
  }
  return d;
}

SurveyDesign SurveyDesign::from_records(std::span<const RespondentRecord> records) {
  std::vector<DesignUnit> units;
  units.reserve(records.size());
  for (const auto& r : records) units.push_back({r.stratum_id, r.psu_id, r.weight});
  return from_units(units);
}

ReplicateWeights::ReplicateWeights(std::size_t replicates, std::size_t units, std::uint64_t seed)
    : replicates_(replicates), units_(units), seed_(seed), values_(replicates * units, 0.0), draws_(replicates) {}

ReplicateWeights make_replicates(const SurveyDesign& design, std::size_t replicates, std::uint64_t seed) {
  if (replicates < 1) throw ArgumentError("number of replicates must be at least 1");
  for (const auto& s : design.strata()) {
    if (s.psu_ids.size() < 2) {
      throw DesignError("stratum '" + s.id + "' has " + std::to_string(s.psu_ids.size()) +
                        " PSU; the rescaled bootstrap needs at least 2 PSUs per stratum");
    }
  }
  ReplicateWeights out(replicates, design.unit_count(), seed);
  const auto& strata = design.strata();
  parallel_for(replicates, [&](std::size_t r) {
    std::mt19937_64 rng = stream_for(seed, r);
    auto& draws = out.draws(r);
    draws.resize(strata.size());
    for (std::size_t h = 0; h < strata.size(); ++h) {
      const std::size_t n_h = strata[h].psu_ids.size();
      draws[h].assign(n_h, 0);
      for (std::size_t k = 0; k + 1 < n_h; ++k) ++draws[h][uniform_index(rng, n_h)];
    }
    auto w = out.replicate(r);
    for (std::size_t i = 0; i < design.unit_count(); ++i) {
      const std::size_t h = design.unit_stratum(i);
      const double n_h = static_cast<double>(strata[h].psu_ids.size());
      w[i] = design.weights()[i] * (n_h / (n_h - 1.0)) * draws[h][design.unit_psu(i)];
    }
  });
  return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::pair<double, double> percentile_interval(std::span<const double> values, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("interval level must be in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail)};
}

std::vector<EstimateWithCI> bootstrap_estimate(const WeightedEstimator& estimator, std::span<const double> base_weights,
                                               const ReplicateWeights& replicates, std::vector<std::string> labels,
                                               double level) {
  if (replicates.unit_count() != base_weights.size()) {
    throw ArgumentError("replicate weights do not match the number of sampled units");
  }
  const auto point = estimator(base_weights);
  if (point.size() != labels.size()) throw ArgumentError("estimator output does not match the label count");

  std::vector<std::vector<std::optional<double>>> values(replicates.replicate_count());
  parallel_for(replicates.replicate_count(), [&](std::size_t r) {
    values[r] = estimator(replicates.replicate(r));
    if (values[r].size() != labels.size()) throw ArgumentError("estimator output size changed between replicates");
  });

  std::vector<EstimateWithCI> out;
  out.reserve(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    EstimateWithCI e;
    e.label = std::move(labels[k]);
    e.estimate = point[k];
    e.level = level;
    std::vector<double> ok;
    ok.reserve(values.size());
    for (const auto& rep : values) {
      e.replicates.push_back(rep[k]);
      if (rep[k]) {
        ok.push_back(*rep[k]);
      } else {
        ++e.failed_replicates;
      }
    }
    e.degenerate = static_cast<double>(e.failed_replicates) > 0.10 * static_cast<double>(values.size());
    if (ok.empty()) {
      e.lo = e.hi = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::tie(e.lo, e.hi) = percentile_interval(ok, level);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace netsurv
