#include "netsurv/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "netsurv/errors.hpp"
#include "netsurv/rng.hpp"

namespace netsurv {

namespace {

// Generator streams, one per phase of world building.
enum Phase : std::uint64_t {
  kPeople = 1,
  kDeaths,
  kDegrees,
  kPairing,
  kRepair,
  kNonframe,
  kKnownPops,
  kReports,
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double group_mean(const DegreeSpec& spec, int group) {
  return spec.mean.size() == 1 ? spec.mean.front() : spec.mean.at(static_cast<std::size_t>(group));
}

long long draw_degree(DegreeLaw law, double mean, double dispersion, std::mt19937_64& rng) {
  switch (law) {
    case DegreeLaw::fixed:
      return std::llround(mean);
    case DegreeLaw::poisson:
      return mean > 0.0 ? std::poisson_distribution<long long>(mean)(rng) : 0;
    case DegreeLaw::negative_binomial: {
      if (!(mean > 0.0)) return 0;
      const double lambda = std::gamma_distribution<double>(dispersion, mean / dispersion)(rng);
      return lambda > 0.0 ? std::poisson_distribution<long long>(lambda)(rng) : 0;
    }
  }
  return 0;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

/// k distinct values from [0, n), Floyd's algorithm; sorted.
std::vector<std::uint32_t> choose_distinct(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::unordered_set<std::uint32_t> chosen;
  chosen.reserve(k * 2);
  for (std::size_t t = n - k; t < n; ++t) {
    const auto r = static_cast<std::uint32_t>(uniform_index(rng, t + 1));
    if (!chosen.insert(r).second) chosen.insert(static_cast<std::uint32_t>(t));
  }
  std::vector<std::uint32_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

/// Pairs stubs at random, then removes self-loops and repeated ties with
/// degree-preserving double-edge swaps.
std::vector<std::pair<std::uint32_t, std::uint32_t>> configuration_model(std::vector<std::uint32_t> stubs,
                                                                         std::mt19937_64& pair_rng,
                                                                         std::mt19937_64& repair_rng) {
  shuffle(stubs, pair_rng);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(stubs.size() / 2);
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(stubs.size());
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    edges.emplace_back(stubs[i], stubs[i + 1]);
    ++count[edge_key(stubs[i], stubs[i + 1])];
  }
  auto bad = [&](const std::pair<std::uint32_t, std::uint32_t>& e) {
    return e.first == e.second || count[edge_key(e.first, e.second)] > 1;
  };
  auto usable = [&](std::uint32_t a, std::uint32_t b) { return a != b && count.find(edge_key(a, b)) == count.end(); };
  auto remove = [&](std::uint32_t a, std::uint32_t b) {
    auto it = count.find(edge_key(a, b));
    if (--it->second == 0) count.erase(it);
  };

  constexpr int kMaxPasses = 50;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    bool clean = true;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!bad(edges[e])) continue;
      clean = false;
      for (int attempt = 0; attempt < 200; ++attempt) {
        const std::size_t f = uniform_index(repair_rng, edges.size());
        if (f == e) continue;
        auto [u, v] = edges[e];
        auto [x, y] = edges[f];
        if (uniform01(repair_rng) < 0.5) std::swap(x, y);
        if (!usable(u, x) || !usable(v, y) || edge_key(u, x) == edge_key(v, y)) continue;
        remove(u, v);
        remove(x, y);
        edges[e] = {u, x};
        edges[f] = {v, y};
        ++count[edge_key(u, x)];
        ++count[edge_key(v, y)];
        break;
      }
    }
    if (clean) return edges;
  }
  throw ConfigError("could not build a network without repeated ties; mean degree is too large for the frame");
}

std::vector<double> per_group(const nlohmann::json& j, const GroupScheme& scheme, std::string_view what) {
  const std::size_t G = scheme.group_count();
  if (j.is_number()) return std::vector<double>(G, j.get<double>());
  if (j.is_array()) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != G && v.size() != 1) {
      throw ConfigError(std::string(what) + " needs 1 or " + std::to_string(G) + " values, got " +
                        std::to_string(v.size()));
    }
    if (v.size() == 1) v.assign(G, v.front());
    return v;
  }
  if (j.is_object()) {
    std::vector<double> v(G, kNaN);
    for (const auto& [label, value] : j.items()) {
      const auto g = scheme.find(label);
      if (!g) throw ConfigError(std::string(what) + ": unknown group '" + label + "'");
      v[g->index] = value.get<double>();
    }
    for (std::size_t g = 0; g < G; ++g) {
      if (std::isnan(v[g])) throw ConfigError(std::string(what) + ": no value for group " + scheme.group(g).label());
    }
    return v;
  }
  throw ConfigError(std::string(what) + " must be a number, a list or an object keyed by group");
}

void check_probability(double p, std::string_view what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

void validate(const SimConfig& c) {
  const std::size_t G = c.scheme.group_count();
  if (c.population_size < 2) throw ConfigError("population_size must be at least 2");
  if (c.population_size > std::numeric_limits<std::uint32_t>::max() / 2) throw ConfigError("population_size too large");
  if (!(c.child_share >= 0.0 && c.child_share < 1.0)) throw ConfigError("child_share must lie in [0, 1)");
  if (c.death_rates.size() != G) {
    throw ConfigError("death_rates needs one value per group (" + std::to_string(G) + ")");
  }
  for (double r : c.death_rates) check_probability(r, "death rate");
  if (c.degree.mean.size() != 1 && c.degree.mean.size() != G) {
    throw ConfigError("degree.mean needs 1 or " + std::to_string(G) + " values");
  }
  for (double m : c.degree.mean) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("degree.mean must be finite and >= 0");
    if (c.degree.law == DegreeLaw::fixed && m != std::round(m)) {
      throw ConfigError("the fixed degree law needs whole-number means");
    }
  }
  if (c.degree.law == DegreeLaw::negative_binomial && !(c.degree.dispersion > 0.0)) {
    throw ConfigError("degree.dispersion must be positive");
  }
  if (!(c.nonframe_degree >= 0.0)) throw ConfigError("nonframe_degree must be >= 0");
  const auto& kp = c.known_populations;
  if (kp.names.empty()) throw ConfigError("at least one known population is needed");
  if (std::set<std::string>(kp.names.begin(), kp.names.end()).size() != kp.names.size()) {
    throw ConfigError("known population names must be unique");
  }
  if (!kp.shares.empty()) {
    if (kp.shares.size() != kp.names.size()) throw ConfigError("known_populations.shares must match names");
    for (double s : kp.shares) {
      if (!(s > 0.0 && s <= 1.0)) throw ConfigError("known population shares must lie in (0, 1]");
    }
  }
  check_probability(c.reporting.omission, "reporting.omission");
  check_probability(c.reporting.false_positive, "reporting.false_positive");
  if (!(c.reporting.decedent_degree_multiplier > 0.0)) {
    throw ConfigError("reporting.decedent_degree_multiplier must be positive");
  }
  if (c.geography.strata < 1 || c.geography.clusters_per_stratum < 1) {
    throw ConfigError("geography needs at least one stratum and one cluster");
  }
}

SimConfig parse_sim_config(const nlohmann::json& j) {
  try {
    SimConfig c;
    c.scheme = parse_estimation_config(j.dump()).scheme;
    c.population_size = j.value("population_size", c.population_size);
    c.child_share = j.value("child_share", c.child_share);
    if (!j.contains("death_rates")) throw ConfigError("simulation config needs death_rates");
    c.death_rates = per_group(j.at("death_rates"), c.scheme, "death_rates");
    if (j.contains("degree")) {
      const auto& d = j.at("degree");
      const std::string law = d.value("law", std::string("fixed"));
      if (law == "fixed") {
        c.degree.law = DegreeLaw::fixed;
      } else if (law == "poisson") {
        c.degree.law = DegreeLaw::poisson;
      } else if (law == "negative_binomial") {
        c.degree.law = DegreeLaw::negative_binomial;
      } else {
        throw ConfigError("unknown degree law '" + law + "'");
      }
      if (d.contains("mean")) c.degree.mean = per_group(d.at("mean"), c.scheme, "degree.mean");
      c.degree.dispersion = d.value("dispersion", c.degree.dispersion);
    }
    c.nonframe_degree = j.value("nonframe_degree", c.nonframe_degree);
    if (j.contains("known_populations")) {
      const auto& k = j.at("known_populations");
      const std::string mode = k.value("mode", std::string("partition"));
      if (mode == "partition") {
        c.known_populations.mode = KnownPopMode::partition;
      } else if (mode == "independent") {
        c.known_populations.mode = KnownPopMode::independent;
      } else {
        throw ConfigError("unknown known_populations.mode '" + mode + "'");
      }
      if (k.contains("names")) c.known_populations.names = k.at("names").get<std::vector<std::string>>();
      if (k.contains("shares")) c.known_populations.shares = k.at("shares").get<std::vector<double>>();
      c.known_populations.degree_bias = k.value("degree_bias", 0.0);
    }
    if (j.contains("reporting")) {
      const auto& r = j.at("reporting");
      c.reporting.omission = r.value("omission", 0.0);
      c.reporting.false_positive = r.value("false_positive", 0.0);
      c.reporting.decedent_degree_multiplier = r.value("decedent_degree_multiplier", 1.0);
    }
    if (j.contains("geography")) {
      c.geography.strata = j.at("geography").value("strata", 1);
      c.geography.clusters_per_stratum = j.at("geography").value("clusters_per_stratum", 1);
    }
    c.tie_definition = j.value("tie_definition", c.tie_definition);
    c.seed = j.value("seed", c.seed);
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad simulation config value: ") + e.what());
  }
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_sim_config(j);
}

// ---------------------------------------------------------------------------

std::vector<std::uint32_t> SyntheticWorld::frame() const {
  std::vector<std::uint32_t> f;
  for (std::uint32_t i = 0; i < persons.size(); ++i) {
    if (persons[i].in_frame) f.push_back(i);
  }
  return f;
}

std::size_t SyntheticWorld::frame_size() const {
  return static_cast<std::size_t>(
      std::count_if(persons.begin(), persons.end(), [](const Person& p) { return p.in_frame; }));
}

KnownPopulationTable SyntheticWorld::known_population_table() const {
  std::vector<KnownPopulation> entries;
  for (std::size_t j = 0; j < kp_names.size(); ++j) {
    entries.push_back({kp_names[j], std::count(kp_member[j].begin(), kp_member[j].end(), 1)});
  }
  return KnownPopulationTable(std::move(entries));
}

std::vector<long long> SyntheticWorld::kp_connections(std::uint32_t person) const {
  std::vector<long long> out(kp_names.size(), 0);
  for (const auto n : neighbors[person]) {
    for (std::size_t j = 0; j < kp_names.size(); ++j) out[j] += kp_member[j][n];
  }
  return out;
}

void SyntheticWorld::tabulate_reports() {
  const std::size_t G = group_count();
  out_all.assign(persons.size() * G, 0);
  out_true.assign(persons.size() * G, 0);
  in_count.assign(persons.size(), 0);
  for (const auto& r : reports) {
    ++in_count[r.to];
    const int g = persons[r.to].group;
    if (g < 0) continue;
    ++out_all[r.from * G + static_cast<std::size_t>(g)];
    if (!persons[r.to].alive) ++out_true[r.from * G + static_cast<std::size_t>(g)];
  }
}

WorldBuilder::WorldBuilder(GroupScheme scheme) { world_.scheme = std::move(scheme); }

std::uint32_t WorldBuilder::add_person(int age, Sex sex, bool alive, int stratum, int cluster) {
  Person p;
  p.age = age;
  p.sex = sex;
  p.alive = alive;
  p.stratum = stratum;
  p.cluster = cluster;
  if (const auto g = world_.scheme.assign(age, sex)) p.group = static_cast<int>(g->index);
  p.in_frame = alive && world_.scheme.frame_age_range(sex).contains(age);
  world_.persons.push_back(p);
  world_.neighbors.emplace_back();
  for (auto& m : world_.kp_member) m.push_back(0);
  return static_cast<std::uint32_t>(world_.persons.size() - 1);
}

void WorldBuilder::add_tie(std::uint32_t a, std::uint32_t b) {
  if (a >= world_.persons.size() || b >= world_.persons.size()) throw ArgumentError("tie to an unknown person");
  if (a == b) throw ArgumentError("a person cannot be tied to themself");
  auto& na = world_.neighbors[a];
  if (std::find(na.begin(), na.end(), b) != na.end()) throw ArgumentError("tie added twice");
  na.push_back(b);
  world_.neighbors[b].push_back(a);
}

void WorldBuilder::add_known_population(std::string name, const std::vector<std::uint32_t>& members) {
  std::vector<char> flag(world_.persons.size(), 0);
  for (auto m : members) {
    if (m >= flag.size()) throw ArgumentError("known population member is not a person");
    if (!world_.persons[m].in_frame) throw ArgumentError("known population members must be in the frame");
    flag[m] = 1;
  }
  world_.kp_names.push_back(std::move(name));
  world_.kp_member.push_back(std::move(flag));
}

void WorldBuilder::add_report(std::uint32_t from, std::uint32_t to) {
  if (from >= world_.persons.size() || to >= world_.persons.size()) throw ArgumentError("report about an unknown person");
  if (!world_.persons[from].in_frame) throw ArgumentError("reports must come from living frame members");
  world_.reports.push_back({from, to});
}

SyntheticWorld WorldBuilder::build() && {
  for (auto& n : world_.neighbors) std::sort(n.begin(), n.end());
  world_.tabulate_reports();
  return std::move(world_);
}

SyntheticWorld generate_world(const SimConfig& config) {
  validate(config);
  SyntheticWorld w;
  w.scheme = config.scheme;
  w.tie_definition = config.tie_definition;
  w.seed = config.seed;
  const auto& scheme = config.scheme;
  const std::size_t N = config.population_size;

  // People: children below the first age break, adults uniform over the scheme.
  {
    auto rng = stream_for(config.seed, kPeople);
    const auto children = static_cast<std::size_t>(std::llround(config.child_share * static_cast<double>(N)));
    const auto adult_span = static_cast<std::uint64_t>(scheme.max_age() - scheme.min_age());
    w.persons.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      Person& p = w.persons[i];
      p.sex = uniform_index(rng, 2) == 0 ? Sex::female : Sex::male;
      if (i < children) {
        p.age = scheme.min_age() > 0 ? static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(scheme.min_age())))
                                     : 0;
      } else {
        p.age = scheme.min_age() + static_cast<int>(uniform_index(rng, adult_span));
      }
      if (const auto g = scheme.assign(p.age, p.sex)) p.group = static_cast<int>(g->index);
      p.stratum = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(config.geography.strata)));
      p.cluster = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(config.geography.clusters_per_stratum)));
    }
  }
  {
    auto rng = stream_for(config.seed, kDeaths);
    for (auto& p : w.persons) {
      if (p.group >= 0 && uniform01(rng) < config.death_rates[static_cast<std::size_t>(p.group)]) p.alive = false;
      p.in_frame = p.alive && scheme.frame_age_range(p.sex).contains(p.age);
    }
  }
  const std::vector<std::uint32_t> frame = w.frame();
  const std::size_t NF = frame.size();
  if (NF < 2) throw ConfigError("the simulated frame has fewer than 2 people");
  w.neighbors.assign(N, {});

  // Frame-frame ties.
  std::vector<long long> frame_degree(N, 0);
  {
    auto rng = stream_for(config.seed, kDegrees);
    std::vector<std::uint32_t> stubs;
    for (const auto i : frame) {
      const double mean = group_mean(config.degree, w.persons[i].group);
      if (mean > static_cast<double>(NF - 1)) {
        throw ConfigError("mean degree " + std::to_string(mean) + " exceeds the frame size minus one (" +
                          std::to_string(NF - 1) + ")");
      }
      const long long k = std::min<long long>(draw_degree(config.degree.law, mean, config.degree.dispersion, rng),
                                              static_cast<long long>(NF - 1));
      frame_degree[i] = k;
      stubs.insert(stubs.end(), static_cast<std::size_t>(k), i);
    }
    if (stubs.size() % 2 == 1) {
      if (config.degree.law == DegreeLaw::fixed) {
        throw ConfigError("fixed degrees give an odd number of tie ends; use even degrees");
      }
      const std::uint32_t extra = frame[uniform_index(rng, NF)];
      ++frame_degree[extra];
      stubs.push_back(extra);
    }
    auto pair_rng = stream_for(config.seed, kPairing);
    auto repair_rng = stream_for(config.seed, kRepair);
    for (const auto& [a, b] : configuration_model(std::move(stubs), pair_rng, repair_rng)) {
      w.neighbors[a].push_back(b);
      w.neighbors[b].push_back(a);
    }
  }

  // Everyone outside the frame (decedents, children, out-of-frame adults) is
  // tied to distinct frame members only.
  {
    auto rng = stream_for(config.seed, kNonframe);
    const double mult = config.reporting.decedent_degree_multiplier;
    for (std::uint32_t j = 0; j < N; ++j) {
      const Person& p = w.persons[j];
      if (p.in_frame) continue;
      long long k = 0;
      if (!p.alive) {
        k = draw_degree(config.degree.law, group_mean(config.degree, p.group) * mult, config.degree.dispersion, rng);
      } else if (p.group >= 0) {
        k = draw_degree(config.degree.law, group_mean(config.degree, p.group), config.degree.dispersion, rng);
      } else {
        k = draw_degree(config.degree.law, config.nonframe_degree, config.degree.dispersion, rng);
      }
      if (k > static_cast<long long>(NF)) {
        if (config.degree.law == DegreeLaw::fixed) {
          throw ConfigError("degree " + std::to_string(k) + " exceeds the frame size " + std::to_string(NF));
        }
        k = static_cast<long long>(NF);
      }
      for (const auto idx : choose_distinct(NF, static_cast<std::size_t>(k), rng)) {
        w.neighbors[j].push_back(frame[idx]);
        w.neighbors[frame[idx]].push_back(j);
      }
    }
  }
  for (auto& n : w.neighbors) std::sort(n.begin(), n.end());

  // Known populations, all inside the frame.
  {
    auto rng = stream_for(config.seed, kKnownPops);
    const auto& kp = config.known_populations;
    const std::size_t J = kp.names.size();
    w.kp_names = kp.names;
    w.kp_member.assign(J, std::vector<char>(N, 0));
    if (kp.mode == KnownPopMode::partition) {
      std::vector<double> cum(J);
      double total = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        total += kp.shares.empty() ? 1.0 : kp.shares[j];
        cum[j] = total;
      }
      for (const auto i : frame) {
        const double u = uniform01(rng) * total;
        const auto j = std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()), J - 1);
        w.kp_member[j][i] = 1;
      }
    } else {
      for (std::size_t j = 0; j < J; ++j) {
        const double share = kp.shares.empty() ? 0.05 : kp.shares[j];
        const auto size = static_cast<std::size_t>(std::llround(share * static_cast<double>(NF)));
        // Weighted sampling without replacement: keep the largest u^(1/weight).
        std::vector<std::pair<double, std::uint32_t>> keys;
        keys.reserve(NF);
        for (const auto i : frame) {
          const double weight = std::pow(static_cast<double>(frame_degree[i]) + 1.0, kp.degree_bias);
          keys.emplace_back(std::log(uniform01(rng) + 1e-300) / weight, i);
        }
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(size), keys.end(),
                          [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t t = 0; t < size; ++t) w.kp_member[j][keys[t].second] = 1;
      }
    }
    for (std::size_t j = 0; j < J; ++j) {
      if (std::count(w.kp_member[j].begin(), w.kp_member[j].end(), 1) == 0) {
        throw ConfigError("known population '" + kp.names[j] + "' ended up empty; raise its share");
      }
    }
  }

  // Reports: thinned ties to decedents plus spurious reports about living people.
  {
    auto rng = stream_for(config.seed, kReports);
    const double keep = 1.0 - config.reporting.omission;
    const double fp = config.reporting.false_positive;
    for (const auto i : frame) {
      for (const auto j : w.neighbors[i]) {
        const Person& t = w.persons[j];
        if (!t.alive) {
          if (keep >= 1.0 || uniform01(rng) < keep) w.reports.push_back({i, j});
        } else if (t.group >= 0 && fp > 0.0) {
          if (uniform01(rng) < fp) w.reports.push_back({i, j});
        }
      }
    }
  }
  w.tabulate_reports();
  return w;
}

// ---------------------------------------------------------------------------

double GroupTruth::decedent_degree() const {
  return deaths > 0 ? static_cast<double>(decedent_ties) / static_cast<double>(deaths) : kNaN;
}

double GroupTruth::frame_degree() const {
  return frame_population > 0 ? static_cast<double>(frame_ties) / static_cast<double>(frame_population) : kNaN;
}

double GroupTruth::probe_degree() const {
  return frame_population > 0 ? static_cast<double>(probe_ties) / static_cast<double>(frame_population) : kNaN;
}

double GroupTruth::death_estimand() const { return static_cast<double>(reports) / frame_degree(); }

double GroupTruth::census_rate() const {
  if (probe_ties == 0) return kNaN;
  return static_cast<double>(reports) / static_cast<double>(probe_ties) * (probe_total / frame_size);
}

std::vector<GroupTruth> true_quantities(const SyntheticWorld& world) {
  const std::size_t G = world.group_count();
  std::vector<GroupTruth> out(G);
  const auto kp = world.known_population_table();
  for (std::size_t g = 0; g < G; ++g) {
    out[g].group = world.scheme.group(g);
    out[g].frame_size = static_cast<double>(world.frame_size());
    out[g].probe_total = static_cast<double>(kp.total());
  }
  for (std::uint32_t i = 0; i < world.persons.size(); ++i) {
    const Person& p = world.persons[i];
    if (p.in_frame) {
      for (std::size_t g = 0; g < G; ++g) {
        out[g].reports += world.out_all[i * G + g];
        out[g].true_reports += world.out_true[i * G + g];
      }
    }
    if (p.group < 0) continue;
    GroupTruth& t = out[static_cast<std::size_t>(p.group)];
    long long to_frame = 0;
    for (const auto n : world.neighbors[i]) to_frame += world.persons[n].in_frame ? 1 : 0;
    if (!p.alive) {
      ++t.deaths;
      t.decedent_ties += to_frame;
      t.in_reports += world.in_count[i];
      continue;
    }
    ++t.population;
    if (p.in_frame) {
      ++t.frame_population;
      t.frame_ties += to_frame;
      for (const auto c : world.kp_connections(i)) t.probe_ties += c;
    }
  }
  for (auto& t : out) {
    t.death_rate = t.population > 0 ? static_cast<double>(t.deaths) / static_cast<double>(t.population) : kNaN;
  }
  return out;
}

GroupTruth true_quantities(const SyntheticWorld& world, const GroupId& group) {
  if (group.index >= world.group_count()) throw ArgumentError("group is not part of the world's scheme");
  return true_quantities(world)[group.index];
}

IdentityCheck verify_reporting_identity(const SyntheticWorld& world) {
  IdentityCheck check;
  std::ostringstream msg;
  const std::size_t G = world.group_count();
  const std::size_t N = world.persons.size();
  if (world.out_all.size() != N * G || world.out_true.size() != N * G || world.in_count.size() != N) {
    check.ok = false;
    msg << "report tables have the wrong shape\n";
  }
  for (const auto& r : world.reports) {
    if (r.from >= N || r.to >= N || !world.persons[r.from].in_frame) {
      check.ok = false;
      msg << "report " << r.from << " -> " << r.to << " does not come from a living frame member\n";
    }
  }
  if (!check.ok) {
    check.report = msg.str();
    return check;
  }
  std::vector<long long> out_side(G, 0), in_side(G, 0);
  for (std::size_t i = 0; i < N; ++i) {
    if (world.persons[i].in_frame) {
      for (std::size_t g = 0; g < G; ++g) out_side[g] += world.out_true[i * G + g];
    }
    const Person& p = world.persons[i];
    if (!p.alive && p.group >= 0) in_side[static_cast<std::size_t>(p.group)] += world.in_count[i];
  }
  for (std::size_t g = 0; g < G; ++g) {
    if (out_side[g] != in_side[g]) {
      check.ok = false;
      const auto label = world.scheme.group(g).label();
      check.failing_groups.push_back(label);
      msg << label << ": out-reports to deaths " << out_side[g] << " != in-reports received by deaths " << in_side[g]
          << "\n";
    }
  }
  check.report = check.ok ? "reporting identity holds for every group" : msg.str();
  return check;
}

// ---------------------------------------------------------------------------

SampleDesign parse_sample_design(const nlohmann::json& j) {
  try {
    SampleDesign d;
    const std::string kind = j.value("design", std::string("census"));
    if (kind == "census") {
      d.kind = SampleDesign::Kind::census;
    } else if (kind == "srs") {
      d.kind = SampleDesign::Kind::srs;
      d.n = j.at("n").get<std::size_t>();
    } else if (kind == "two_stage") {
      d.kind = SampleDesign::Kind::two_stage;
      d.psus_per_stratum = j.at("psus_per_stratum").get<std::size_t>();
      d.persons_per_psu = j.at("persons_per_psu").get<std::size_t>();
    } else {
      throw ConfigError("unknown sample design '" + kind + "'");
    }
    if (j.contains("weight_error")) {
      WeightErrorSpec e;
      e.sigma = j.at("weight_error").value("sigma", 0.0);
      e.degree_slope = j.at("weight_error").value("degree_slope", 0.0);
      if (!(e.sigma >= 0.0)) throw ConfigError("weight_error.sigma must be >= 0");
      d.weight_error = e;
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad sample design: ") + e.what());
  }
}

std::vector<double> weight_errors(const SyntheticWorld& world, const WeightErrorSpec& spec, std::uint64_t seed) {
  auto rng = stream_for(seed, 0xE5);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto frame = world.frame();
  std::vector<double> degree(world.persons.size(), 0.0);
  double mean = 0.0;
  for (const auto i : frame) {
    degree[i] = static_cast<double>(world.neighbors[i].size());
    mean += degree[i];
  }
  mean = frame.empty() ? 0.0 : mean / static_cast<double>(frame.size());
  std::vector<double> eps(world.persons.size(), 1.0);
  for (const auto i : frame) {
    const double tilt = mean > 0.0 ? spec.degree_slope * (degree[i] / mean - 1.0) : 0.0;
    eps[i] = std::exp(spec.sigma * z(rng) + tilt);
  }
  return eps;
}

SimulatedSample draw_sample(const SyntheticWorld& world, const SampleDesign& design, std::uint64_t seed) {
  const auto frame = world.frame();
  const std::size_t NF = frame.size();
  auto rng = stream_for(seed, 0x5A);

  struct Pick {
    std::uint32_t person;
    double weight;
    std::string stratum, psu;
  };
  std::vector<Pick> picks;
  auto cluster_id = [&](const Person& p) { return "S" + std::to_string(p.stratum) + "C" + std::to_string(p.cluster); };

  switch (design.kind) {
    case SampleDesign::Kind::census:
      for (const auto i : frame) {
        const Person& p = world.persons[i];
        picks.push_back({i, 1.0, "S" + std::to_string(p.stratum), cluster_id(p)});
      }
      break;
    case SampleDesign::Kind::srs: {
      if (design.n == 0 || design.n > NF) {
        throw ArgumentError("SRS of " + std::to_string(design.n) + " from a frame of " + std::to_string(NF));
      }
      std::vector<std::uint32_t> pool = frame;
      for (std::size_t t = 0; t < design.n; ++t) std::swap(pool[t], pool[t + uniform_index(rng, NF - t)]);
      pool.resize(design.n);
      std::sort(pool.begin(), pool.end());
      const double w = static_cast<double>(NF) / static_cast<double>(design.n);
      for (const auto i : pool) picks.push_back({i, w, "all", "P" + std::to_string(i)});
      break;
    }
    case SampleDesign::Kind::two_stage: {
      if (design.psus_per_stratum == 0 || design.persons_per_psu == 0) {
        throw ArgumentError("two-stage design needs PSUs per stratum and persons per PSU");
      }
      int strata = 0, clusters = 0;
      for (const auto& p : world.persons) {
        strata = std::max(strata, p.stratum + 1);
        clusters = std::max(clusters, p.cluster + 1);
      }
      const auto M = static_cast<std::size_t>(clusters);
      if (design.psus_per_stratum > M) {
        throw ArgumentError("design asks for " + std::to_string(design.psus_per_stratum) + " PSUs per stratum but only " +
                            std::to_string(M) + " exist");
      }
      std::vector<std::vector<std::uint32_t>> members(static_cast<std::size_t>(strata) * M);
      for (const auto i : frame) {
        const Person& p = world.persons[i];
        members[static_cast<std::size_t>(p.stratum) * M + static_cast<std::size_t>(p.cluster)].push_back(i);
      }
      for (std::size_t h = 0; h < static_cast<std::size_t>(strata); ++h) {
        std::vector<std::size_t> cl(M);
        std::iota(cl.begin(), cl.end(), 0);
        for (std::size_t t = 0; t < design.psus_per_stratum; ++t) std::swap(cl[t], cl[t + uniform_index(rng, M - t)]);
        cl.resize(design.psus_per_stratum);
        std::sort(cl.begin(), cl.end());
        for (const auto c : cl) {
          auto pool = members[h * M + c];
          const std::size_t Nc = pool.size();
          const std::size_t take = std::min(design.persons_per_psu, Nc);
          for (std::size_t t = 0; t < take; ++t) std::swap(pool[t], pool[t + uniform_index(rng, Nc - t)]);
          pool.resize(take);
          std::sort(pool.begin(), pool.end());
          const double pi = static_cast<double>(design.psus_per_stratum) / static_cast<double>(M) *
                            static_cast<double>(take) / static_cast<double>(Nc);
          for (const auto i : pool) picks.push_back({i, 1.0 / pi, "S" + std::to_string(h), cluster_id(world.persons[i])});
        }
      }
      break;
    }
  }

  const std::vector<double> eps = design.weight_error ? weight_errors(world, *design.weight_error, seed)
                                                      : std::vector<double>(world.persons.size(), 1.0);

  // Outgoing reports per person, in report order.
  std::vector<std::size_t> start(world.persons.size() + 1, 0);
  for (const auto& r : world.reports) ++start[r.from + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<std::uint32_t> targets(world.reports.size());
  {
    auto fill = start;
    for (const auto& r : world.reports) targets[fill[r.from]++] = r.to;
  }

  SimulatedSample s;
  s.records.reserve(picks.size());
  for (auto& pk : picks) {
    const Person& p = world.persons[pk.person];
    RespondentRecord r;
    r.respondent_id = "P" + std::to_string(pk.person);
    r.stratum_id = std::move(pk.stratum);
    r.psu_id = std::move(pk.psu);
    r.weight = pk.weight * eps[pk.person];
    r.age = p.age;
    r.sex = p.sex;
    r.tie_definition = world.tie_definition;
    for (std::size_t k = start[pk.person]; k < start[pk.person + 1]; ++k) {
      const Person& t = world.persons[targets[k]];
      r.death_reports.push_back({t.age, t.sex, world.tie_definition});
    }
    const auto kp = world.kp_connections(pk.person);
    for (std::size_t j = 0; j < kp.size(); ++j) r.kp_connections[world.kp_names[j]] = kp[j];
    s.records.push_back(std::move(r));
    s.persons.push_back(pk.person);
    s.true_weights.push_back(pk.weight);
    s.epsilon.push_back(eps[pk.person]);
  }
  return s;
}

nlohmann::json truth_to_json(const SyntheticWorld& world) {
  auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  nlohmann::json j;
  j["seed"] = world.seed;
  j["tie_definition"] = world.tie_definition;
  j["population_size"] = world.persons.size();
  j["frame_size"] = world.frame_size();
  j["reports"] = world.reports.size();
  const auto kp = world.known_population_table();
  j["probe_total"] = kp.total();
  j["known_populations"] = nlohmann::json::array();
  for (const auto& e : kp.entries()) j["known_populations"].push_back({{"name", e.name}, {"size", e.size}});
  j["groups"] = nlohmann::json::array();
  for (const auto& t : true_quantities(world)) {
    j["groups"].push_back({{"group", t.group.label()},
                           {"deaths", t.deaths},
                           {"population", t.population},
                           {"frame_population", t.frame_population},
                           {"death_rate", num(t.death_rate)},
                           {"reports", t.reports},
                           {"true_reports", t.true_reports},
                           {"in_reports", t.in_reports},
                           {"decedent_degree", num(t.decedent_degree())},
                           {"frame_degree", num(t.frame_degree())},
                           {"probe_degree", num(t.probe_degree())},
                           {"census_rate", num(t.census_rate())}});
  }
  j["identity_holds"] = verify_reporting_identity(world).ok;
  return j;
}

}  // namespace netsurv
