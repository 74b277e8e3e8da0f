#pragma once

#include <optional>
#include <span>
#include <vector>

#include "netsurv/survey_data.hpp"

namespace netsurv {

struct RateBin {
  double age_lo = 0.0;
  double age_hi = 0.0;
  double rate = 0.0;  // deaths per person-year
};

/// Contiguous, non-overlapping age-specific death rates, sorted by age.
class RateSchedule {
 public:
  explicit RateSchedule(std::vector<RateBin> bins);

  const std::vector<RateBin>& bins() const noexcept { return bins_; }

 private:
  std::vector<RateBin> bins_;
};

/// Converts a rate over a bin of width `width` years to a conditional death
/// probability, n·m / (1 + (n − a)·m), clamped to [0, 1]. `a_factor` is the
/// average years lived in the bin by those who die; defaults to width / 2.
double rate_to_prob(double rate, double width, std::optional<double> a_factor = std::nullopt);

/// Probability of dying between `from_age` and `to_age` given survival to
/// `from_age`. Bins straddling either end are truncated, keeping their rate.
/// Throws ScheduleError naming any uncovered gap.
double conditional_q(const RateSchedule& schedule, double from_age = 15.0, double to_age = 60.0);

/// The schedule for one sex from per-group rates (indexed like the scheme).
/// Empty when any group of that sex has no rate.
std::optional<RateSchedule> schedule_for_sex(const GroupScheme& scheme, std::span<const std::optional<double>> rates,
                                             Sex sex);

}  // namespace netsurv
