// Prints one PASS/FAIL/SKIP line per acceptance criterion; exits 1 on any FAIL.
// Usage: netsurv_acceptance [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "netsurv/bootstrap.hpp"
#include "netsurv/cli.hpp"
#include "netsurv/csv.hpp"
#include "netsurv/diagnostics.hpp"
#include "netsurv/estimators.hpp"
#include "netsurv/life_table.hpp"
#include "netsurv/sensitivity.hpp"
#include "netsurv/simulation.hpp"
#include "properties.hpp"

using namespace netsurv;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, skip };

struct Result {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

Result verdict(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

// Per 1,000 PY magnitudes for women then men, youngest group first.
const std::vector<double> kRealisticRates{0.00319, 0.00297, 0.00358, 0.00582, 0.0134,
                                          0.00396, 0.00348, 0.00797, 0.00972, 0.02069};

SimConfig clean_world(std::size_t n, std::uint64_t seed) {
  SimConfig c;
  c.population_size = n;
  c.scheme = GroupScheme({15, 25, 35, 45, 55, 65}, {15, 65}, {15, 65});
  c.death_rates = kRealisticRates;
  c.degree.law = DegreeLaw::fixed;
  c.degree.mean = {20.0};
  c.known_populations.mode = KnownPopMode::partition;
  c.seed = seed;
  return c;
}

Result census_exactness() {
  const auto t0 = Clock::now();
  const auto world = generate_world(clean_world(20000, 2024));
  const auto sample = draw_sample(world, {}, 1);
  const auto rates = network_survival_rate(sample.records, world.known_population_table(), world.scheme,
                                           frame_totals(sample.records, double(world.frame_size())));
  double worst = 0.0;
  int groups = 0;
  for (const auto& t : true_quantities(world)) {
    const auto& r = rates[t.group.index];
    if (!r.estimate) return verdict(false, t.group.label() + " not estimated: " + r.message);
    worst = std::max(worst, std::abs(r.estimate->M_hat - t.death_rate) / t.death_rate);
    ++groups;
  }
  const double secs = seconds_since(t0);
  return verdict(worst <= 1e-12 && secs < 30.0, std::to_string(groups) + " groups, worst relative error " + fmt(worst) +
                                                    " (limit 1e-12), " + fmt(secs) + " s (limit 30)");
}

Result decomposition_identity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> omission(0.0, 0.5), fp(0.0, 0.02), delta(0.5, 1.5);
  double worst = 0.0;
  int checked = 0, skipped = 0, identity_failures = 0;
  for (int w = 0; w < 100; ++w) {
    SimConfig c;
    c.population_size = 2000;
    c.death_rates = {0.01, 0.015, 0.02, 0.03, 0.05, 0.012, 0.02, 0.03, 0.045, 0.07};
    c.degree.law = w % 2 ? DegreeLaw::poisson : DegreeLaw::negative_binomial;
    c.degree.mean = {12.0};
    c.nonframe_degree = 2.0;
    c.known_populations.mode = KnownPopMode::independent;
    c.reporting.omission = omission(rng);
    c.reporting.false_positive = fp(rng);
    c.reporting.decedent_degree_multiplier = delta(rng);
    c.seed = 1000 + static_cast<std::uint64_t>(w);
    const auto world = generate_world(c);
    if (!verify_reporting_identity(world).ok) ++identity_failures;
    for (const auto& t : true_quantities(world)) {
      const auto adj = adjustment_from_truth(world, t.group);
      if (!adj.factors) {
        ++skipped;
        continue;
      }
      const auto& f = *adj.factors;
      const double D = t.death_estimand() * (1.0 / f.delta) * (f.eta / f.tau);
      worst = std::max(worst, std::abs(D - double(t.deaths)) / double(t.deaths));
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return verdict(worst <= 1e-9 && identity_failures == 0 && checked > 0 && secs < 60.0,
                 std::to_string(checked) + " world-groups, worst relative error " + fmt(worst) + " (limit 1e-9), " +
                     std::to_string(skipped) + " groups without deaths or reports skipped, " +
                     std::to_string(identity_failures) + " report-count mismatches, " + fmt(secs) + " s (limit 60)");
}

Result sensitivity_example() {
  AdjustmentFactors f;
  f.delta = 0.5;
  f.eta = 1.5;
  const double m = f.multiplier();
  const double adjusted = apply_sensitivity(0.01, f);
  return verdict(m == 3.0 && adjusted == 0.01 * 3.0, "multiplier " + fmt(m, 17) + " (exactly 3 required)");
}

Result monte_carlo_unbiasedness() {
  const auto t0 = Clock::now();
  const auto world = generate_world(clean_world(50000, 4242));
  const auto truth = true_quantities(world);
  const auto kp = world.known_population_table();
  const double NF = double(world.frame_size());
  constexpr int S = 1000;
  SampleDesign srs;
  srs.kind = SampleDesign::Kind::srs;
  srs.n = 2400;
  const std::size_t G = world.group_count();
  std::vector<std::vector<double>> draws(G);
  int missing = 0;
  for (int s = 0; s < S; ++s) {
    const auto sample = draw_sample(world, srs, 50000 + static_cast<std::uint64_t>(s));
    const auto rates = network_survival_rate(sample.records, kp, world.scheme, frame_totals(sample.records, NF));
    for (std::size_t g = 0; g < G; ++g) {
      if (rates[g].estimate) {
        draws[g].push_back(rates[g].estimate->M_hat);
      } else {
        ++missing;
      }
    }
  }
  double worst_z = 0.0;
  std::string worst_group;
  for (std::size_t g = 0; g < G; ++g) {
    const auto& v = draws[g];
    double mean = 0.0, ss = 0.0;
    for (double x : v) mean += x / double(v.size());
    for (double x : v) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / double(v.size() - 1)) / std::sqrt(double(v.size()));
    const double z = std::abs(mean - truth[g].death_rate) / se;
    if (z > worst_z) worst_z = z, worst_group = truth[g].group.label();
  }
  const double secs = seconds_since(t0);
  return verdict(worst_z <= 3.0 && missing == 0 && secs < 300.0,
                 std::to_string(S) + " SRS samples of 2400, worst |bias| " + fmt(worst_z) + " MC SE in " +
                     worst_group + " (limit 3), " + std::to_string(missing) + " failed estimates, " + fmt(secs) +
                     " s (limit 300)");
}

Result bootstrap_coverage() {
  const auto t0 = Clock::now();
  auto cfg = clean_world(50000, 5151);
  cfg.geography = {10, 40};
  const auto world = generate_world(cfg);
  const auto truth = true_quantities(world);
  const auto kp = world.known_population_table();
  const double NF = double(world.frame_size());
  SampleDesign design;
  design.kind = SampleDesign::Kind::two_stage;
  design.psus_per_stratum = 12;
  design.persons_per_psu = 20;
  constexpr int S = 200;
  constexpr std::size_t R = 500;
  const std::size_t G = world.group_count();
  std::vector<int> covered(G, 0);
  std::vector<std::string> labels;
  for (const auto& g : world.scheme.groups()) labels.push_back(g.label());
  for (int s = 0; s < S; ++s) {
    const auto sample = draw_sample(world, design, 90000 + static_cast<std::uint64_t>(s));
    const PreparedSample prepared(sample.records, kp, world.scheme);
    const auto reps = make_replicates(SurveyDesign::from_records(sample.records), R, 7000 + std::uint64_t(s));
    const WeightedEstimator est = [&](std::span<const double> w) { return prepared.rate_values(w, NF); };
    const auto ci = bootstrap_estimate(est, weights_of(sample.records), reps, labels);
    for (std::size_t g = 0; g < G; ++g) {
      if (ci[g].lo <= truth[g].death_rate && truth[g].death_rate <= ci[g].hi) ++covered[g];
    }
  }
  const auto [lo, hi] = std::minmax_element(covered.begin(), covered.end());
  const double min_cov = double(*lo) / S, max_cov = double(*hi) / S;
  const double secs = seconds_since(t0);
  return verdict(min_cov >= 0.90 && max_cov <= 1.0 && secs < 600.0,
                 std::to_string(S) + " two-stage surveys (10 strata x 12 of 40 clusters x 20), R=" +
                     std::to_string(R) + ", per-group coverage " + fmt(100 * min_cov) + "%.." + fmt(100 * max_cov) +
                     "% (required 90..100), " + fmt(secs) + " s (limit 600)");
}

Result life_table_closed_form() {
  std::vector<RateBin> bins, zero;
  for (double a = 15; a < 65; a += 10) {
    bins.push_back({a, a + 10, 0.01});
    zero.push_back({a, a + 10, 0.0});
  }
  const double q = conditional_q(RateSchedule(bins), 15.0, 60.0);
  // Four whole 10-year bins and half of the last, each q = n m / (1 + n m / 2).
  const double closed = 1.0 - std::pow(1.0 - 0.1 / 1.05, 4) * (1.0 - 0.05 / 1.025);
  const double q0 = conditional_q(RateSchedule(zero), 15.0, 60.0);
  const double gap = std::abs(q - 0.362593);
  return verdict(std::abs(q - closed) <= 1e-9 && q0 == 0.0,
                 "45q15 " + fmt(q, 16) + ", closed form " + fmt(closed, 16) + " (limit 1e-9), zero schedule " +
                     fmt(q0) + "; the quoted 0.362593 is " + fmt(gap, 2) + " away, a rounding slip of 0.3625913");
}

Result descriptive_reproduction() {
  const fs::path dir = fs::path(NETSURV_TEST_DATA) / "descriptive";
  const auto table = load_respondents(dir / "respondents.csv", dir / "deaths.csv");
  std::map<std::string, std::vector<RespondentRecord>> by_tie;
  for (const auto& r : table.records) by_tie[r.tie_definition].push_back(r);
  const std::map<std::string, std::tuple<long long, long long, double>> want{{"acquaintance", {1681, 2259, 0.74}},
                                                                              {"meal", {932, 2404, 0.39}}};
  bool ok = by_tie.size() == want.size();
  std::string detail;
  for (const auto& [tie, expect] : want) {
    if (!by_tie.count(tie)) return verdict(false, "fixture has no " + tie + " respondents");
    const auto d = deaths_per_interview(by_tie[tie]);
    const double rounded = std::round(d.ratio * 100.0) / 100.0;
    ok = ok && d.deaths == std::get<0>(expect) && d.interviews == std::get<1>(expect) &&
         std::abs(rounded - std::get<2>(expect)) < 1e-12;
    detail += (detail.empty() ? "" : ", ") + tie + " " + std::to_string(d.deaths) + "/" +
              std::to_string(d.interviews) + " = " + fmt(rounded, 2);
  }
  return verdict(ok, detail);
}

// Runs the CLI on user-supplied survey extracts and compares against the
// published tables bundled in tests/data/published.
Result full_reproduction() {
  const char* env = std::getenv("NETSURV_RWANDA_DIR");
  if (!env || !*env) return {Verdict::skip, "set NETSURV_RWANDA_DIR to a directory of prepared survey extracts"};
  const fs::path in(env);
  for (const char* f : {"respondents.csv", "deaths.csv", "known_populations.csv", "config.json"}) {
    if (!fs::exists(in / f)) return verdict(false, std::string("missing ") + (in / f).string());
  }
  testing::TempDir work;
  std::map<std::pair<std::string, std::string>, std::vector<RateBin>> got;  // (tie, sex) -> bins
  std::map<std::tuple<std::string, std::string, int>, double> rates;
  auto collect = [&](const std::string& tie, const fs::path& csv_path, const char* rate_column) {
    const auto t = csv::read(csv_path);
    const auto c_sex = t.require_column("sex"), c_lo = t.require_column("age_lo"),
               c_hi = t.require_column("age_hi"), c_rate = t.require_column(rate_column);
    for (const auto& row : t.rows()) {
      const auto m = csv::to_double(row[c_rate]);
      if (!m) continue;
      const int lo = static_cast<int>(*csv::to_integer(row[c_lo])), hi = static_cast<int>(*csv::to_integer(row[c_hi]));
      rates[{tie, row[c_sex], lo}] = *m * 1000.0;
      got[{tie, row[c_sex]}].push_back({double(lo), double(hi), *m});
    }
  };
  std::ostringstream sink;
  for (const std::string tie : {"acquaintance", "meal"}) {
    const auto out = work.path() / (tie + ".csv");
    const int status = run_command({"estimate", "--config", (in / "config.json").string(), "--respondents",
                                    (in / "respondents.csv").string(), "--deaths", (in / "deaths.csv").string(),
                                    "--known-pops", (in / "known_populations.csv").string(), "--tie-definition", tie,
                                    "--out", out.string()},
                                   sink, sink);
    if (status != 0) return verdict(false, "estimate failed for " + tie + ": " + sink.str());
    collect(tie, out, "M_hat");
  }
  if (fs::exists(in / "siblings.csv")) {
    const auto out = work.path() / "sibling.csv";
    if (run_command({"sibling", "--siblings", (in / "siblings.csv").string(), "--window-months", "84", "--out",
                     out.string()},
                    sink, sink) != 0)
      return verdict(false, "sibling failed: " + sink.str());
    collect("sibling", out, "rate");
  }

  const fs::path pub = fs::path(NETSURV_TEST_DATA) / "published";
  int compared = 0, off = 0;
  double worst_rate = 0.0, worst_q = 0.0;
  const auto ref = csv::read(pub / "rates_per_1000.csv");
  for (const auto& row : ref.rows()) {
    const auto it = rates.find({row[0], row[1], static_cast<int>(*csv::to_integer(row[2]))});
    if (it == rates.end()) continue;
    const double d = std::abs(it->second - *csv::to_double(row[4]));
    worst_rate = std::max(worst_rate, d);
    off += d > 0.01 + 1e-9;
    ++compared;
  }
  const auto qref = csv::read(pub / "q45_15.csv");
  for (const auto& row : qref.rows()) {
    const auto it = got.find({row[0], row[1]});
    if (it == got.end()) continue;
    const double q = conditional_q(RateSchedule(it->second), 15.0, 60.0);
    const double d = std::abs(q - *csv::to_double(row[2]));
    worst_q = std::max(worst_q, d);
    off += d > 0.01 + 1e-9;
    ++compared;
  }
  return verdict(compared > 0 && off == 0, std::to_string(compared) + " published values compared, worst rate gap " +
                                               fmt(worst_rate) + " per 1,000, worst 45q15 gap " + fmt(worst_q) +
                                               " (limits 0.01), " + std::to_string(off) + " outside");
}

Result property_suites() {
  const auto t0 = Clock::now();
  const auto outcomes = properties::run_all(500, 9001);
  bool ok = true;
  std::string detail;
  for (const auto& o : outcomes) {
    ok = ok && o.ok() && o.cases >= 500;
    detail += (detail.empty() ? "" : "; ") + o.name + " " + std::to_string(o.cases - o.failures) + "/" +
              std::to_string(o.cases);
    if (!o.ok()) detail += " (" + o.first_failure + ")";
  }
  const double secs = seconds_since(t0);
  return verdict(ok && secs < 120.0, detail + "; " + fmt(secs) + " s (limit 120)");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Result (*)()>> criteria{
      {"census exactness", census_exactness},
      {"decomposition identity", decomposition_identity},
      {"sensitivity worked example", sensitivity_example},
      {"Monte Carlo unbiasedness", monte_carlo_unbiasedness},
      {"bootstrap coverage", bootstrap_coverage},
      {"life-table closed form", life_table_closed_form},
      {"descriptive reproduction", descriptive_reproduction},
      {"full reproduction (opt-in)", full_reproduction},
      {"property suites", property_suites},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Result r;
    try {
      r = criteria[k].second();
    } catch (const std::exception& e) {
      r = {Verdict::fail, std::string("threw: ") + e.what()};
    }
    const char* v = r.verdict == Verdict::pass ? "PASS" : r.verdict == Verdict::skip ? "SKIP" : "FAIL";
    failures += r.verdict == Verdict::fail;
    std::cout << "criterion " << id << " " << v << " " << criteria[k].first << ": " << r.detail << std::endl;
  }
  return failures ? 1 : 0;
}
