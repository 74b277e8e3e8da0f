#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "netsurv/bootstrap.hpp"
#include "netsurv/errors.hpp"
#include "netsurv/rng.hpp"

using namespace netsurv;

namespace {

std::vector<DesignUnit> units(const std::vector<int>& psus_per_stratum, int per_psu, double w = 1.0) {
  std::vector<DesignUnit> out;
  for (std::size_t h = 0; h < psus_per_stratum.size(); ++h)
    for (int c = 0; c < psus_per_stratum[h]; ++c)
      for (int i = 0; i < per_psu; ++i)
        out.push_back({"h" + std::to_string(h), "c" + std::to_string(c), w * (1.0 + 0.1 * i)});
  return out;
}

}  // namespace

TEST_CASE("design from units") {
  const auto u = units({2, 3}, 2);
  const auto d = SurveyDesign::from_units(u);
  CHECK(d.unit_count() == 10);
  REQUIRE(d.strata().size() == 2);
  CHECK(d.strata()[1].psu_ids.size() == 3);
  CHECK(d.unit_stratum(9) == 1);
  CHECK(d.unit_psu(9) == 2);
}

TEST_CASE("two-PSU stratum doubles one PSU and zeroes the other") {
  const auto u = units({2}, 3);
  const auto reps = make_replicates(SurveyDesign::from_units(u), 200, 42);
  for (std::size_t r = 0; r < reps.replicate_count(); ++r) {
    const auto w = reps.replicate(r);
    const bool first = w[0] > 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const bool in_first = i < 3;
      CHECK(w[i] == (in_first == first ? 2.0 * u[i].weight : 0.0));
    }
  }
}

TEST_CASE("single-PSU stratum is a design error naming it") {
  try {
    make_replicates(SurveyDesign::from_units(units({3, 1}, 2)), 10, 1);
    FAIL("expected DesignError");
  } catch (const DesignError& e) {
    CHECK(std::string(e.what()).find("h1") != std::string::npos);
  }
}

TEST_CASE("replicates are reproducible and exchangeable in their index") {
  const auto d = SurveyDesign::from_units(units({4, 5, 3}, 3));
  const auto a = make_replicates(d, 50, 7);
  const auto b = make_replicates(d, 50, 7);
  CHECK(a == b);
  const auto c = make_replicates(d, 50, 8);
  CHECK_FALSE(a == c);
  // Replicate r depends only on (seed, r): a shorter run is a prefix.
  const auto e = make_replicates(d, 20, 7);
  for (std::size_t r = 0; r < 20; ++r) {
    const auto x = a.replicate(r), y = e.replicate(r);
    CHECK(std::equal(x.begin(), x.end(), y.begin()));
  }
}

TEST_CASE("draw totals per stratum are n_h - 1") {
  const std::vector<int> sizes{2, 3, 7, 12};
  const auto d = SurveyDesign::from_units(units(sizes, 2));
  const auto reps = make_replicates(d, 500, 99);
  for (std::size_t r = 0; r < reps.replicate_count(); ++r) {
    for (std::size_t h = 0; h < sizes.size(); ++h) {
      const auto& draws = reps.draws(r)[h];
      CHECK(std::accumulate(draws.begin(), draws.end(), 0) == sizes[h] - 1);
    }
    const auto w = reps.replicate(r);
    for (std::size_t i = 0; i < d.unit_count(); ++i) {
      const double n = sizes[d.unit_stratum(i)];
      CHECK(w[i] == d.weights()[i] * (n / (n - 1)) * reps.draws(r)[d.unit_stratum(i)][d.unit_psu(i)]);
      CHECK(w[i] >= 0.0);
    }
  }
}

TEST_CASE("quantiles and intervals") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  const auto [lo, hi] = percentile_interval(v, 0.95);
  CHECK(lo == doctest::Approx(3.475).epsilon(1e-14));
  CHECK(hi == doctest::Approx(97.525).epsilon(1e-14));
  const std::vector<double> flat(30, 2.5);
  const auto [a, b] = percentile_interval(flat, 0.95);
  CHECK(a == 2.5);
  CHECK(b == 2.5);
  CHECK(quantile_sorted(std::vector<double>{4.0}, 0.3) == 4.0);
  CHECK(std::isnan(percentile_interval(std::vector<double>{}, 0.9).first));
  CHECK_THROWS_AS(percentile_interval(v, 1.5), ArgumentError);
}

TEST_CASE("interval endpoints widen with the level") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(57);
    for (auto& x : v) x = z(rng);
    const auto [a, b] = percentile_interval(v, 0.8);
    const auto [c, d] = percentile_interval(v, 0.95);
    CHECK(c <= a);
    CHECK(d >= b);
  }
}

TEST_CASE("bootstrap_estimate") {
  const auto u = units({3, 4}, 5);
  const auto d = SurveyDesign::from_units(u);
  const auto reps = make_replicates(d, 300, 11);
  const WeightedEstimator total = [](std::span<const double> w) {
    return std::vector<std::optional<double>>{std::accumulate(w.begin(), w.end(), 0.0), w[0] > 0 ? std::optional(1.0) : std::nullopt};
  };
  const auto out = bootstrap_estimate(total, d.weights(), reps, {"total", "flaky"});
  REQUIRE(out.size() == 2);
  CHECK(out[0].label == "total");
  CHECK(*out[0].estimate == doctest::Approx(std::accumulate(d.weights().begin(), d.weights().end(), 0.0)));
  CHECK(out[0].replicates.size() == 300);
  // Every PSU carries the same weight, so the total barely moves.
  CHECK(out[0].lo == doctest::Approx(*out[0].estimate).epsilon(1e-12));
  CHECK(out[0].hi == doctest::Approx(*out[0].estimate).epsilon(1e-12));
  CHECK_FALSE(out[0].degenerate);
  // First PSU of a 3-PSU stratum is missed in about 4/9 of replicates.
  CHECK(out[1].failed_replicates > 30);
  CHECK(out[1].degenerate);
  CHECK_THROWS_AS(bootstrap_estimate(total, d.weights(), reps, {"only one"}), ArgumentError);
}

TEST_CASE("bootstrap results do not depend on the thread count") {
  const auto d = SurveyDesign::from_units(units({5, 6, 4}, 4));
  const auto reps = make_replicates(d, 400, 3);
  const WeightedEstimator ratio = [](std::span<const double> w) {
    double a = 0, b = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      a += w[i] * double(i % 7);
      b += w[i];
    }
    return std::vector<std::optional<double>>{a / b};
  };
  ::setenv("NETSURV_THREADS", "1", 1);
  const auto one = bootstrap_estimate(ratio, d.weights(), reps, {"r"});
  ::setenv("NETSURV_THREADS", "8", 1);
  const auto many = bootstrap_estimate(ratio, d.weights(), reps, {"r"});
  ::unsetenv("NETSURV_THREADS");
  CHECK(one[0].replicates == many[0].replicates);
  CHECK(one[0].lo == many[0].lo);
  CHECK(one[0].hi == many[0].hi);
}

TEST_CASE("rng helpers") {
  auto a = stream_for(1, 0), b = stream_for(1, 0), c = stream_for(1, 1);
  CHECK(a() == b());
  CHECK(a() != c());
  auto r = stream_for(5, 5);
  std::vector<int> counts(7);
  for (int i = 0; i < 70000; ++i) ++counts[uniform_index(r, 7)];
  for (int k : counts) CHECK(std::abs(k - 10000) < 500);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(r);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
