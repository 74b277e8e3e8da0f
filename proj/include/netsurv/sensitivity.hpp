#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netsurv/simulation.hpp"

namespace netsurv {

/// Departures from the conditions the estimator relies on. All 1 (and K = 0)
/// means every condition holds.
struct AdjustmentFactors {
  double delta = 1.0;  // decedents' degree over frame members' degree
  double tau = 1.0;    // reports received by deaths over their ties to the frame
  double eta = 1.0;    // share of death reports that are about real deaths
  double c1 = 1.0;     // known-population total used over the true total
  double c2 = 1.0;     // probe alters' degree to the group over the frame's
  double c3 = 1.0;     // reported over actual ties to the known populations
  double c4 = 1.0;     // group size over frame size within the group, N_α / N_{F_α}
  double K1 = 0.0;     // imperfect sampling index for the death reports
  double K2 = 0.0;     // imperfect sampling index for the known-population reports

  /// Throws ArgumentError when a factor is outside its domain.
  void validate() const;
  /// The number the estimate is multiplied by.
  double multiplier() const;
};

/// Factor set equivalent to applying `a` and then `b`.
AdjustmentFactors compose(const AdjustmentFactors& a, const AdjustmentFactors& b);

/// M_hat × (c2·c3/c1) × (1/c4) × η/(τ·δ) × (1+K2)/(1+K1).
double apply_sensitivity(double M_hat, const AdjustmentFactors& factors);

struct TrueAdjustment {
  GroupId group;
  /// Empty when the group has no deaths, no ties from its deaths, or no
  /// reports, so that δ, τ or η is undefined.
  std::optional<AdjustmentFactors> factors;
  std::string missing_reason;
};

/// Exact factors for `group`, by enumeration over the world's ties and
/// reports. K1 = K2 = 0 and c1 = c3 = 1, since the world's known-population
/// sizes and tie counts are exact.
TrueAdjustment adjustment_from_truth(const SyntheticWorld& world, const GroupId& group);

/// K = cv(ε)·cv(y)·cor(ε, y) with population standard deviations.
/// Returns 0 when either input has no variance.
double imperfect_sampling_index(std::span<const double> epsilons, std::span<const double> values);

struct GridCell {
  double delta = 1.0;
  double eta_over_tau = 1.0;
  std::vector<std::optional<double>> rates;  // one per input group
};

/// One adjusted schedule per (δ, η/τ) pair, δ varying slowest.
std::vector<GridCell> sensitivity_grid(std::span<const std::optional<double>> M_hat,
                                       std::span<const double> delta_grid, std::span<const double> eta_over_tau_grid);

inline const std::vector<double> kDefaultGrid{0.5, 1.0, 1.5};

}  // namespace netsurv
