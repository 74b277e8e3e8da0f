#include "netsurv/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "netsurv/errors.hpp"

namespace netsurv {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(name) + " must be positive and finite");
}

}  // namespace

void AdjustmentFactors::validate() const {
  require_positive(delta, "delta");
  require_positive(tau, "tau");
  require_positive(c1, "c1");
  require_positive(c2, "c2");
  require_positive(c3, "c3");
  require_positive(c4, "c4");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ArgumentError("eta must be non-negative and finite");
  if (!(K1 > -1.0) || !(K2 > -1.0)) throw ArgumentError("K indices must be greater than -1");
}

double AdjustmentFactors::multiplier() const {
  validate();
  return (c2 * c3 / c1) * (1.0 / c4) * (eta / (tau * delta)) * ((1.0 + K2) / (1.0 + K1));
}

AdjustmentFactors compose(const AdjustmentFactors& a, const AdjustmentFactors& b) {
  AdjustmentFactors f;
  f.delta = a.delta * b.delta;
  f.tau = a.tau * b.tau;
  f.eta = a.eta * b.eta;
  f.c1 = a.c1 * b.c1;
  f.c2 = a.c2 * b.c2;
  f.c3 = a.c3 * b.c3;
  f.c4 = a.c4 * b.c4;
  f.K1 = (1.0 + a.K1) * (1.0 + b.K1) - 1.0;
  f.K2 = (1.0 + a.K2) * (1.0 + b.K2) - 1.0;
  return f;
}

double apply_sensitivity(double M_hat, const AdjustmentFactors& factors) { return M_hat * factors.multiplier(); }

TrueAdjustment adjustment_from_truth(const SyntheticWorld& world, const GroupId& group) {
  const GroupTruth t = true_quantities(world, group);
  TrueAdjustment out;
  out.group = t.group;
  if (t.deaths == 0) {
    out.missing_reason = "no deaths in group, so delta and tau are undefined";
    return out;
  }
  if (t.decedent_ties == 0) {
    out.missing_reason = "deaths in group have no ties to the frame, so tau is undefined";
    return out;
  }
  if (t.reports == 0) {
    out.missing_reason = "no reports about the group, so eta is undefined";
    return out;
  }
  if (t.frame_ties == 0 || t.probe_ties == 0) {
    out.missing_reason = "frame members in group have no ties, so delta and c2 are undefined";
    return out;
  }
  AdjustmentFactors f;
  f.delta = t.decedent_degree() / t.frame_degree();
  f.tau = static_cast<double>(t.in_reports) / static_cast<double>(t.decedent_ties);
  f.eta = static_cast<double>(t.true_reports) / static_cast<double>(t.reports);
  f.c2 = (static_cast<double>(t.probe_ties) / t.probe_total) / (static_cast<double>(t.frame_ties) / t.frame_size);
  f.c4 = static_cast<double>(t.population) / static_cast<double>(t.frame_population);
  if (!(f.tau > 0.0)) {
    out.missing_reason = "no deaths in group were reported, so tau is zero";
    return out;
  }
  out.factors = f;
  return out;
}

double imperfect_sampling_index(std::span<const double> epsilons, std::span<const double> values) {
  if (epsilons.size() != values.size()) throw ArgumentError("epsilons and values must have equal length");
  if (epsilons.size() < 2) throw ArgumentError("the imperfect sampling index needs at least 2 values");
  const auto n = static_cast<double>(epsilons.size());
  double me = 0.0, my = 0.0;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    me += epsilons[i];
    my += values[i];
  }
  me /= n;
  my /= n;
  if (!(me > 0.0) || !(my > 0.0)) throw ArgumentError("the imperfect sampling index needs positive means");
  const auto [emin, emax] = std::minmax_element(epsilons.begin(), epsilons.end());
  const auto [ymin, ymax] = std::minmax_element(values.begin(), values.end());
  if (*emin == *emax || *ymin == *ymax) return 0.0;
  // cv(ε)·cv(y)·cor(ε,y) reduces to cov(ε,y) / (mean ε · mean y).
  double cov = 0.0;
  for (std::size_t i = 0; i < epsilons.size(); ++i) cov += (epsilons[i] - me) * (values[i] - my);
  cov /= n;
  return cov / (me * my);
}

std::vector<GridCell> sensitivity_grid(std::span<const std::optional<double>> M_hat,
                                       std::span<const double> delta_grid, std::span<const double> eta_over_tau_grid) {
  for (double d : delta_grid) require_positive(d, "grid value for delta");
  for (double r : eta_over_tau_grid) require_positive(r, "grid value for eta/tau");
  std::vector<GridCell> out;
  out.reserve(delta_grid.size() * eta_over_tau_grid.size());
  for (double d : delta_grid) {
    for (double r : eta_over_tau_grid) {
      AdjustmentFactors f;
      f.delta = d;
      f.eta = r;
      GridCell cell{d, r, {}};
      cell.rates.reserve(M_hat.size());
      for (const auto& m : M_hat) cell.rates.push_back(m ? std::optional<double>(apply_sensitivity(*m, f)) : std::nullopt);
      out.push_back(std::move(cell));
    }
  }
  return out;
}

}  // namespace netsurv
