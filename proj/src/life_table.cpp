#include "netsurv/life_table.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "netsurv/errors.hpp"

namespace netsurv {

namespace {

std::string fmt_age(double a) {
  std::ostringstream os;
  os << a;
  return os.str();
}

}  // namespace

RateSchedule::RateSchedule(std::vector<RateBin> bins) : bins_(std::move(bins)) {
  std::sort(bins_.begin(), bins_.end(), [](const RateBin& a, const RateBin& b) { return a.age_lo < b.age_lo; });
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    const auto& b = bins_[i];
    if (!(b.age_hi > b.age_lo)) throw ScheduleError("rate bin [" + fmt_age(b.age_lo) + "," + fmt_age(b.age_hi) + ") is empty");
    if (!(b.rate >= 0.0) || !std::isfinite(b.rate)) {
      throw ScheduleError("rate for bin [" + fmt_age(b.age_lo) + "," + fmt_age(b.age_hi) + ") must be finite and >= 0");
    }
    if (i > 0 && b.age_lo < bins_[i - 1].age_hi) {
      throw ScheduleError("rate bins overlap at age " + fmt_age(b.age_lo));
    }
  }
}

double rate_to_prob(double rate, double width, std::optional<double> a_factor) {
  if (!(rate >= 0.0)) throw ArgumentError("death rate must be non-negative");
  if (!(width > 0.0)) throw ArgumentError("bin width must be positive");
  const double a = a_factor.value_or(width / 2.0);
  if (!(a > 0.0 && a <= width)) throw ArgumentError("a_factor must lie in (0, width]");
  const double q = width * rate / (1.0 + (width - a) * rate);
  return std::clamp(q, 0.0, 1.0);
}

double conditional_q(const RateSchedule& schedule, double from_age, double to_age) {
  if (!(to_age > from_age)) throw ArgumentError("conditional_q needs to_age > from_age");
  double covered_to = from_age;
  double survival = 1.0;
  for (const auto& b : schedule.bins()) {
    if (b.age_hi <= from_age) continue;
    if (b.age_lo >= to_age) break;
    if (b.age_lo > covered_to) {
      throw ScheduleError("rate schedule has a gap [" + fmt_age(covered_to) + "," + fmt_age(b.age_lo) + ")");
    }
    const double lo = std::max(b.age_lo, covered_to);
    const double hi = std::min(b.age_hi, to_age);
    survival *= 1.0 - rate_to_prob(b.rate, hi - lo);
    covered_to = hi;
  }
  if (covered_to < to_age) {
    throw ScheduleError("rate schedule has a gap [" + fmt_age(covered_to) + "," + fmt_age(to_age) + ")");
  }
  return std::clamp(1.0 - survival, 0.0, 1.0);
}

std::optional<RateSchedule> schedule_for_sex(const GroupScheme& scheme, std::span<const std::optional<double>> rates,
                                             Sex sex) {
  if (rates.size() != scheme.group_count()) throw ArgumentError("one rate per group is needed");
  std::vector<RateBin> bins;
  for (const auto& g : scheme.groups()) {
    if (g.sex != sex) continue;
    if (!rates[g.index]) return std::nullopt;
    bins.push_back({static_cast<double>(g.age_lo), static_cast<double>(g.age_hi), *rates[g.index]});
  }
  return RateSchedule(std::move(bins));
}

}  // namespace netsurv
