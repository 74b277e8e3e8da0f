#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "netsurv/errors.hpp"
#include "netsurv/estimators.hpp"
#include "netsurv/simulation.hpp"

using namespace netsurv;
using testing::close_rel;
using testing::death;
using testing::respondent;

namespace {

const GroupScheme kScheme({15, 25, 35, 45, 55, 65});

GroupId F15() { return *kScheme.find("F[15,25)"); }

SimConfig census_config(std::uint64_t seed) {
  SimConfig c;
  c.population_size = 4000;
  c.scheme = GroupScheme({15, 25, 35, 45, 55, 65}, {15, 65}, {15, 65});
  c.death_rates = {0.01, 0.012, 0.015, 0.02, 0.04, 0.012, 0.015, 0.02, 0.03, 0.05};
  c.degree.mean = {12.0};
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("ht_death_reports") {
  std::vector<RespondentRecord> recs{respondent("a", 2, 30, Sex::male, {}, {death(20, Sex::female)}),
                                     respondent("b", 4, 40, Sex::female, {},
                                                {death(16, Sex::female), death(24, Sex::female),
                                                 death(30, Sex::female), {std::nullopt, Sex::female, ""}})};
  CHECK(ht_death_reports(recs, F15(), kScheme) == 10.0);
  CHECK(ht_death_reports({}, F15(), kScheme) == 0.0);
  // Attribution follows the decedent, not the respondent.
  CHECK(ht_death_reports(recs, *kScheme.find("M[25,35)"), kScheme) == 0.0);
}

TEST_CASE("kp_average_degree") {
  const KnownPopulationTable kp({{"a", 60}, {"b", 40}});
  std::vector<RespondentRecord> recs{respondent("x", 10, 20, Sex::female, {{"a", 2}, {"b", 3}})};
  const auto d = kp_average_degree(recs, F15(), kScheme, kp, 1000, 100);
  CHECK(d.d_bar_hat == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(d.numerator_hat == 50.0);

  recs[0].kp_connections = {{"a", 0}, {"b", 0}};
  CHECK(kp_average_degree(recs, F15(), kScheme, kp, 1000, 100).d_bar_hat == 0.0);

  // Respondents outside the group do not matter.
  recs.push_back(respondent("y", 10, 40, Sex::female, {{"a", 9}, {"b", 9}}));
  CHECK(kp_average_degree(recs, F15(), kScheme, kp, 1000, 100).d_bar_hat == 0.0);

  CHECK_THROWS_AS(kp_average_degree(recs, F15(), kScheme, KnownPopulationTable{}, 1000, 100), ConfigError);
  CHECK_THROWS_AS(kp_average_degree(recs, *kScheme.find("M[55,65)"), kScheme, kp, 1000, 100), EmptyCellError);
  CHECK_THROWS_AS(kp_average_degree(recs, F15(), kScheme, kp, 0, 100), ArgumentError);
}

TEST_CASE("estimate_deaths and exposure") {
  DegreeEstimate d;
  d.d_bar_hat = 5;
  CHECK(estimate_deaths(100, d) == 20);
  CHECK(estimate_deaths(0, d) == 0);
  d.d_bar_hat = 0;
  CHECK_THROWS_AS(estimate_deaths(3, d), DegenerateVisibilityError);

  std::vector<RespondentRecord> recs{respondent("a", 100, 20, Sex::female), respondent("b", 100, 21, Sex::female),
                                     respondent("c", 100, 24, Sex::female), respondent("d", 7, 30, Sex::female)};
  CHECK(estimate_exposure(recs, F15(), kScheme) == 300);
  CHECK_THROWS_AS(estimate_exposure(recs, *kScheme.find("M[15,25)"), kScheme), EmptyCellError);
}

TEST_CASE("exposures partition the weights") {
  std::mt19937_64 rng(1);
  auto recs = testing::random_records(rng, 300);
  double total = 0.0, sum = 0.0;
  for (const auto& r : recs) total += r.weight;
  for (const auto& g : kScheme.groups()) sum += estimate_exposure(recs, g, kScheme);
  CHECK(close_rel(sum, total, 1e-12));
}

TEST_CASE("general form") {
  CHECK(network_survival_rate_general(100, 5, 1000) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK_THROWS_AS(network_survival_rate_general(1, 0, 10), ArgumentError);
  CHECK_THROWS_AS(network_survival_rate_general(1, 2, -1), ArgumentError);
}

TEST_CASE("ratio form agrees with the general form fed kp_average_degree") {
  std::mt19937_64 rng(2);
  const auto kp = testing::four_pops();
  for (int rep = 0; rep < 50; ++rep) {
    const auto recs = testing::random_records(rng, 400);
    const auto ft = frame_totals(recs);
    const auto rates = network_survival_rate(recs, kp, kScheme, ft);
    for (const auto& r : rates) {
      REQUIRE(r.estimate);
      const double N = estimate_exposure(recs, r.group, kScheme);
      const auto d = kp_average_degree(recs, r.group, kScheme, kp, ft.population, N);
      const double y = ht_death_reports(recs, r.group, kScheme);
      // Different association order, so a few ulp apart at most.
      CHECK(close_rel(network_survival_rate_general(y, d.d_bar_hat, N), r.estimate->M_hat, 1e-13));
      CHECK(close_rel(r.estimate->D_hat / r.estimate->N_hat, r.estimate->M_hat, 1e-13));
      CHECK(r.estimate->y_hat == y);
    }
  }
}

TEST_CASE("failing groups do not sink the others") {
  const KnownPopulationTable kp({{"a", 100}});
  std::vector<RespondentRecord> recs{respondent("a", 1, 20, Sex::female, {{"a", 3}}, {death(20, Sex::female)}),
                                     respondent("b", 1, 30, Sex::female, {{"a", 0}}, {death(30, Sex::female)})};
  const auto rates = network_survival_rate(recs, kp, kScheme, frame_totals(recs));
  REQUIRE(rates.size() == 10);
  CHECK(rates[0].status == GroupStatus::ok);
  CHECK(rates[1].status == GroupStatus::degenerate_visibility);
  CHECK(rates[2].status == GroupStatus::empty_cell);
  CHECK_FALSE(rates[2].estimate);
  CHECK(rates[2].message.find("F[35,45)") != std::string::npos);
}

TEST_CASE("adding a death report never lowers that group's rate") {
  std::mt19937_64 rng(4);
  const auto kp = testing::four_pops();
  std::uniform_int_distribution<int> age(15, 64);
  for (int rep = 0; rep < 100; ++rep) {
    auto recs = testing::random_records(rng, 100);
    const auto before = network_survival_rate(recs, kp, kScheme, frame_totals(recs));
    const int a = age(rng);
    const Sex s = rep % 2 ? Sex::male : Sex::female;
    recs[rep % recs.size()].death_reports.push_back(death(a, s));
    const auto after = network_survival_rate(recs, kp, kScheme, frame_totals(recs));
    const auto g = kScheme.assign(a, s)->index;
    CHECK(after[g].estimate->M_hat >= before[g].estimate->M_hat);
  }
}

TEST_CASE("census estimates equal the world's estimands") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto world = generate_world(census_config(seed));
    const auto sample = draw_sample(world, {}, seed);
    const auto kp = world.known_population_table();
    const auto ft = frame_totals(sample.records);
    const auto rates = network_survival_rate(sample.records, kp, world.scheme, ft);
    for (const auto& t : true_quantities(world)) {
      const auto& r = rates[t.group.index];
      REQUIRE(r.estimate);
      CHECK(r.estimate->y_hat == doctest::Approx(double(t.reports)).epsilon(1e-12));
      CHECK(close_rel(r.estimate->N_hat, double(t.frame_population), 1e-12));
      CHECK(close_rel(r.estimate->d_bar_hat, t.frame_degree(), 1e-12));
      CHECK(close_rel(r.estimate->D_hat, double(t.deaths), 1e-12));
      CHECK(close_rel(r.estimate->M_hat, t.death_rate, 1e-12));
    }
  }
}

TEST_CASE("true visibility in the general form recovers M when decedents' degree differs") {
  auto cfg = census_config(5);
  cfg.reporting.decedent_degree_multiplier = 0.5;
  cfg.degree.mean = {16.0};
  const auto world = generate_world(cfg);
  const auto sample = draw_sample(world, {}, 5);
  const auto rates = network_survival_rate(sample.records, world.known_population_table(), world.scheme,
                                           frame_totals(sample.records));
  for (const auto& t : true_quantities(world)) {
    if (t.deaths == 0) continue;
    const double visibility = double(t.in_reports) / double(t.deaths);
    const double m = network_survival_rate_general(double(t.reports), visibility, double(t.population));
    CHECK(close_rel(m, t.death_rate, 1e-12));
    // The degree proxy overstates visibility here, so it understates M.
    CHECK(rates[t.group.index].estimate->M_hat < t.death_rate * 0.9);
  }
}

// N_F is the population size, so it stays fixed while the weights are rescaled.
// Left to default to the weight sum it would scale with them.
TEST_CASE("multiplying every weight leaves the rates unchanged") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> scale(1e-3, 1e4);
  const auto kp = testing::four_pops();
  for (int rep = 0; rep < 100; ++rep) {
    auto recs = testing::random_records(rng, 200);
    const double N_F = 1e6 * scale(rng);
    const auto base = network_survival_rate(recs, kp, kScheme, frame_totals(recs, N_F));
    const double c = scale(rng);
    for (auto& r : recs) r.weight *= c;
    const auto scaled = network_survival_rate(recs, kp, kScheme, frame_totals(recs, N_F));
    for (std::size_t g = 0; g < base.size(); ++g) {
      CHECK(close_rel(base[g].estimate->M_hat, scaled[g].estimate->M_hat, 1e-12));
    }
  }
}

TEST_CASE("prepared sample matches the direct path") {
  std::mt19937_64 rng(12);
  const auto recs = testing::random_records(rng, 250);
  const auto kp = testing::four_pops();
  const PreparedSample prep(recs, kp, kScheme);
  const auto w = weights_of(recs);
  const auto a = prep.rate_values(w);
  const auto b = network_survival_rate(recs, kp, kScheme, frame_totals(recs));
  for (std::size_t g = 0; g < a.size(); ++g) CHECK(*a[g] == b[g].estimate->M_hat);
  CHECK_THROWS_AS(prep.rate_values(std::vector<double>(3, 1.0)), ArgumentError);
}
