#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netsurv/survey_data.hpp"

namespace netsurv {

enum class DegreeLaw { fixed, poisson, negative_binomial };

struct DegreeSpec {
  DegreeLaw law = DegreeLaw::fixed;
  /// Mean number of ties to the frame, one per group or a single value for all.
  std::vector<double> mean{20.0};
  /// Negative binomial size parameter; variance = mean + mean^2 / dispersion.
  double dispersion = 5.0;
};

enum class KnownPopMode {
  partition,    // every frame member in exactly one population, so 𝒜 = F
  independent,  // populations drawn separately from the frame, may overlap
};

struct KnownPopSpec {
  KnownPopMode mode = KnownPopMode::partition;
  std::vector<std::string> names{"kp1", "kp2", "kp3", "kp4"};
  /// Share of the frame in each population; empty means equal shares
  /// (partition) or 0.05 each (independent).
  std::vector<double> shares;
  /// Independent mode: members are drawn with probability proportional to
  /// degree^degree_bias. 0 leaves the probe alter condition holding on average.
  double degree_bias = 0.0;
};

struct ReportingSpec {
  double omission = 0.0;        // chance a tie to a decedent goes unreported
  double false_positive = 0.0;  // chance a tie to a living person is reported as a death
  double decedent_degree_multiplier = 1.0;
};

struct GeographySpec {
  int strata = 1;
  int clusters_per_stratum = 1;
};

struct SimConfig {
  std::size_t population_size = 20000;
  GroupScheme scheme{{15, 25, 35, 45, 55, 65}};
  /// Share of the population younger than the scheme's first age.
  double child_share = 0.25;
  /// Probability of dying during the reference year, per group.
  std::vector<double> death_rates;
  DegreeSpec degree;
  /// Mean ties to the frame for living people outside it.
  double nonframe_degree = 0.0;
  KnownPopSpec known_populations;
  ReportingSpec reporting;
  GeographySpec geography;
  std::string tie_definition = "simulated";
  std::uint64_t seed = 1;
};

/// Throws ConfigError on any out-of-range setting.
void validate(const SimConfig& config);
SimConfig parse_sim_config(const nlohmann::json& j);
SimConfig load_sim_config(const std::filesystem::path& path);

struct Person {
  int age = 0;  // age at death for decedents
  Sex sex = Sex::female;
  int group = -1;  // index in the scheme, -1 outside it
  bool alive = true;
  bool in_frame = false;
  int stratum = 0;
  int cluster = 0;  // within stratum
};

struct Report {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
};

/// A synthetic population with its personal network, deaths and the reports
/// every frame member would give if interviewed. Built by generate_world or
/// WorldBuilder; the derived tables are kept separately from the raw report
/// list so that verify_reporting_identity can recount them.
struct SyntheticWorld {
  GroupScheme scheme{{15, 25, 35, 45, 55, 65}};
  std::vector<Person> persons;
  std::vector<std::vector<std::uint32_t>> neighbors;  // sorted, no duplicates
  std::vector<std::string> kp_names;
  std::vector<std::vector<char>> kp_member;  // [population][person]
  std::vector<Report> reports;
  std::string tie_definition = "simulated";
  std::uint64_t seed = 0;

  // Reporter side: per person x group, all reports and reports about real deaths.
  std::vector<std::int32_t> out_all;
  std::vector<std::int32_t> out_true;
  // Target side: reports received per person.
  std::vector<std::int32_t> in_count;

  std::size_t group_count() const noexcept { return scheme.group_count(); }
  std::vector<std::uint32_t> frame() const;
  std::size_t frame_size() const;
  KnownPopulationTable known_population_table() const;
  /// Ties from person i to each known population (y_{i,A_j}).
  std::vector<long long> kp_connections(std::uint32_t person) const;
  /// Rebuilds out_all, out_true and in_count from `reports`.
  void tabulate_reports();
};

class WorldBuilder {
 public:
  explicit WorldBuilder(GroupScheme scheme);

  std::uint32_t add_person(int age, Sex sex, bool alive, int stratum = 0, int cluster = 0);
  void add_tie(std::uint32_t a, std::uint32_t b);
  void add_known_population(std::string name, const std::vector<std::uint32_t>& members);
  /// Report edge from a living frame member to anyone in the scheme.
  void add_report(std::uint32_t from, std::uint32_t to);
  /// Frame membership follows the scheme's frame rule for living people.
  SyntheticWorld build() &&;

 private:
  SyntheticWorld world_;
};

/// Deterministic given config.seed. Throws ConfigError when the degree
/// demands cannot be met.
SyntheticWorld generate_world(const SimConfig& config);

/// Exact per-group quantities obtained by enumeration.
struct GroupTruth {
  GroupId group;
  long long deaths = 0;            // D_α
  long long population = 0;        // N_α, living members of the group
  long long frame_population = 0;  // N_{F_α}
  double death_rate = 0.0;         // M_α = D_α / N_α, NaN when N_α = 0
  long long reports = 0;           // y_{F,D_α}
  long long true_reports = 0;      // y⁺_{F,D_α}
  long long in_reports = 0;        // v_{D_α,F}
  long long decedent_ties = 0;     // d_{D_α,F}
  long long frame_ties = 0;        // d_{F_α,F}
  long long probe_ties = 0;        // d_{F_α,𝒜}
  double frame_size = 0.0;         // N_F
  double probe_total = 0.0;        // N_𝒜

  double decedent_degree() const;  // d̄_{D_α,F}
  double frame_degree() const;     // d̄_{F_α,F}
  double probe_degree() const;     // d̄_{F_α,𝒜}
  /// Network survival estimand for D_α: y_{F,D_α} / d̄_{F_α,F}.
  double death_estimand() const;
  /// What the ratio-form estimator gives on a census with true totals.
  double census_rate() const;
};

GroupTruth true_quantities(const SyntheticWorld& world, const GroupId& group);
std::vector<GroupTruth> true_quantities(const SyntheticWorld& world);

struct IdentityCheck {
  bool ok = true;
  std::vector<std::string> failing_groups;
  std::string report;
};

/// Recounts y⁺_{F,D_α} from the reporter-side table and v_{D_α,F} from the
/// target-side table and checks they agree for every group; also checks that
/// every report comes from a living frame member.
IdentityCheck verify_reporting_identity(const SyntheticWorld& world);

struct WeightErrorSpec {
  double sigma = 0.0;  // log-scale noise
  /// Ties ε to the person's degree: log ε gains slope * (k_i / mean k - 1).
  double degree_slope = 0.0;
};

struct SampleDesign {
  enum class Kind { census, srs, two_stage };
  Kind kind = Kind::census;
  std::size_t n = 0;                 // srs
  std::size_t psus_per_stratum = 0;  // two_stage
  std::size_t persons_per_psu = 0;   // two_stage
  std::optional<WeightErrorSpec> weight_error;
};

SampleDesign parse_sample_design(const nlohmann::json& j);

struct SimulatedSample {
  std::vector<RespondentRecord> records;
  std::vector<std::uint32_t> persons;  // world index of each record
  std::vector<double> true_weights;    // 1 / π_i
  std::vector<double> epsilon;         // π_i / π′_i; records carry w′ = ε·w
};

/// Throws ArgumentError when the design asks for more people than exist.
SimulatedSample draw_sample(const SyntheticWorld& world, const SampleDesign& design, std::uint64_t seed);

/// ε for every person in the world (1 outside the frame), as used by draw_sample.
std::vector<double> weight_errors(const SyntheticWorld& world, const WeightErrorSpec& spec, std::uint64_t seed);

nlohmann::json truth_to_json(const SyntheticWorld& world);

}  // namespace netsurv
