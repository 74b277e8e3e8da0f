#include "netsurv/cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "netsurv/csv.hpp"
#include "netsurv/diagnostics.hpp"
#include "netsurv/errors.hpp"
#include "netsurv/estimators.hpp"
#include "netsurv/life_table.hpp"
#include "netsurv/parallel.hpp"
#include "netsurv/sibling.hpp"
#include "netsurv/simulation.hpp"

#ifndef NETSURV_VERSION
#define NETSURV_VERSION "0.0.0"
#endif

namespace netsurv {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path() && !fs::exists(path.parent_path())) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw Error("failed while writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string sha256_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (f) {
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

namespace {

std::string na_or(const std::optional<double>& v) { return v ? csv::format_double(*v) : "NA"; }

}  // namespace

void write_replicate_table(std::ostream& out, std::span<const EstimateWithCI> results) {
  csv::write_row(out, {"label", "replicate", "value"});
  for (const auto& e : results) {
    for (std::size_t r = 0; r < e.replicates.size(); ++r) {
      csv::write_row(out, {e.label, std::to_string(r), na_or(e.replicates[r])});
    }
  }
}

std::vector<std::pair<std::string, std::vector<std::optional<double>>>> read_replicate_table(std::istream& in) {
  const csv::Table t = csv::parse(in, "replicate table");
  const auto c_label = t.require_column("label");
  const auto c_value = t.require_column("value");
  std::vector<std::pair<std::string, std::vector<std::optional<double>>>> out;
  std::map<std::string, std::size_t> index;
  for (const auto& row : t.rows()) {
    auto [it, inserted] = index.try_emplace(row[c_label], out.size());
    if (inserted) out.push_back({row[c_label], {}});
    out[it->second].second.push_back(csv::is_missing(row[c_value]) ? std::nullopt : csv::to_double(row[c_value]));
  }
  return out;
}

void write_grid_table(std::ostream& out, std::span<const GridCell> cells, std::span<const std::string> labels,
                      std::span<const std::string> tie_definitions) {
  csv::write_row(out, {"delta", "eta_over_tau", "group", "adjusted_rate", "tie_definition"});
  for (const auto& c : cells) {
    if (c.rates.size() != labels.size()) throw ArgumentError("grid cell does not match the group labels");
    for (std::size_t k = 0; k < labels.size(); ++k) {
      csv::write_row(out, {csv::format_double(c.delta), csv::format_double(c.eta_over_tau), labels[k], na_or(c.rates[k]),
                           tie_definitions.empty() ? "" : tie_definitions[k]});
    }
  }
}

std::vector<fs::path> emit_plot_tables(const PlotTables& results, const fs::path& dir, const std::string& stem) {
  std::ostringstream reps, grid;
  write_replicate_table(reps, results.bootstrap);
  write_grid_table(grid, results.grid, results.grid_labels, results.grid_tie_definitions);
  const fs::path a = dir / (stem + "_replicates.csv");
  const fs::path b = dir / (stem + "_grid.csv");
  write_file_atomic(a, reps.str());
  write_file_atomic(b, grid.str());
  return {a, b};
}

namespace {

struct Options {
  std::string config, respondents, deaths, known_pops, siblings, estimates, out, out_dir, tie_definition, grid,
      eta_tau_grid;
  std::size_t replicates = 1000;
  std::optional<std::uint64_t> seed;
  int window_months = 84;
  std::optional<int> interview_cmc;
  double level = 0.95;
  double from_age = 15.0;
  double to_age = 60.0;
};

class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args) {
    j_["tool"] = "netsurv";
    j_["version"] = NETSURV_VERSION;
    j_["command"] = std::move(command);
    j_["arguments"] = args;
    j_["threads"] = thread_count();
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
    j_["seed"] = nullptr;
  }
  void input(const fs::path& p) {
    if (p.empty()) return;
    j_["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  }
  void config(const fs::path& p) {
    if (p.empty()) return;
    input(p);
    std::ifstream f(p);
    try {
      j_["config"] = json::parse(f);
    } catch (const json::exception&) {
      j_["config"] = nullptr;
    }
  }
  void seed(std::uint64_t s) { j_["seed"] = s; }
  void output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
  void write(const fs::path& p) { write_file_atomic(p, j_.dump(2) + "\n"); }

 private:
  json j_;
};

fs::path manifest_beside(const fs::path& out) {
  fs::path m = out;
  m += ".manifest.json";
  return m;
}

std::string csv_text(const std::function<void(std::ostream&)>& body) {
  std::ostringstream os;
  body(os);
  return os.str();
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = csv::to_double(item);
    if (!v) throw ArgumentError("grid value '" + item + "' is not a number");
    out.push_back(*v);
  }
  if (out.empty()) throw ArgumentError("grid is empty");
  return out;
}

// --- network inputs -------------------------------------------------------

struct NetworkInputs {
  EstimationConfig config;
  KnownPopulationTable kp;
  std::vector<RespondentRecord> records;
  LoadReport report;
  FrameTotals totals;
  std::string tie_definition;
};

NetworkInputs load_network_inputs(const Options& o, Manifest& manifest) {
  NetworkInputs in;
  in.config = o.config.empty() ? EstimationConfig{} : load_estimation_config(o.config);
  manifest.config(o.config);
  in.kp = load_known_populations(o.known_pops);
  manifest.input(o.known_pops);
  std::optional<fs::path> deaths;
  if (!o.deaths.empty()) deaths = o.deaths;
  SurveyTable table = load_respondents(o.respondents, deaths, &in.kp);
  manifest.input(o.respondents);
  if (deaths) manifest.input(*deaths);
  in.report = table.report;
  auto records = std::move(table.records);

  std::optional<std::string> tie = o.tie_definition.empty() ? in.config.tie_definition : o.tie_definition;
  if (tie) {
    records = filter_tie_definition(std::move(records), *tie);
    if (records.empty()) throw ValidationError("no respondents with tie_definition '" + *tie + "'");
  } else {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.tie_definition);
    if (seen.size() > 1) {
      std::string list;
      for (const auto& s : seen) list += (list.empty() ? "" : ", ") + s;
      throw ValidationError("respondents use several tie definitions (" + list +
                            "); choose one with --tie-definition or the config");
    }
    if (!seen.empty()) tie = *seen.begin();
  }
  in.tie_definition = tie.value_or("");
  records = truncate_frame(std::move(records), in.config.scheme.frame_rule());
  if (in.config.topcode_cap) records = topcode_kp_reports(std::move(records), *in.config.topcode_cap);
  if (in.config.population_total && !records.empty()) {
    records = denormalize_weights(std::move(records), *in.config.population_total);
  }
  in.totals = frame_totals(records, in.config.population_total);
  in.records = std::move(records);
  return in;
}

// --- estimates tables -----------------------------------------------------

struct EstimateRow {
  std::string tie_definition;
  std::string label;
  Sex sex = Sex::female;
  int age_lo = 0;
  int age_hi = 0;
  std::optional<double> rate;
};

std::optional<EstimateRow> parse_label(const std::string& label) {
  EstimateRow r;
  r.label = label;
  if (label.size() < 6 || (label[0] != 'F' && label[0] != 'M') || label[1] != '[' || label.back() != ')') {
    return std::nullopt;
  }
  r.sex = label[0] == 'F' ? Sex::female : Sex::male;
  const auto comma = label.find(',');
  if (comma == std::string::npos) return std::nullopt;
  const auto lo = csv::to_integer(label.substr(2, comma - 2));
  const auto hi = csv::to_integer(label.substr(comma + 1, label.size() - comma - 2));
  if (!lo || !hi) return std::nullopt;
  r.age_lo = static_cast<int>(*lo);
  r.age_hi = static_cast<int>(*hi);
  return r;
}

std::vector<EstimateRow> read_estimates(const fs::path& path) {
  const csv::Table t = csv::read(path);
  const auto c_group = t.require_column("group");
  auto c_rate = t.find_column("M_hat");
  if (!c_rate) c_rate = t.find_column("rate");
  if (!c_rate) throw SchemaError(path.filename().string() + ": needs an M_hat or rate column");
  const auto c_tie = t.find_column("tie_definition");
  std::vector<EstimateRow> out;
  std::size_t line = 1;
  for (const auto& row : t.rows()) {
    ++line;
    auto r = parse_label(row[c_group]);
    if (!r) {
      throw ValidationError(path.filename().string() + " line " + std::to_string(line) + ": bad group label '" +
                            row[c_group] + "'");
    }
    r->rate = csv::is_missing(row[*c_rate]) ? std::nullopt : csv::to_double(row[*c_rate]);
    if (c_tie) r->tie_definition = row[*c_tie];
    out.push_back(std::move(*r));
  }
  return out;
}

// --- subcommands ----------------------------------------------------------

int cmd_estimate(const Options& o, Manifest& manifest, std::ostream& out) {
  const NetworkInputs in = load_network_inputs(o, manifest);
  const auto rates = network_survival_rate(in.records, in.kp, in.config.scheme, in.totals);
  std::size_t ok = 0;
  const std::string text = csv_text([&](std::ostream& os) {
    csv::write_row(os, {"group", "sex", "age_lo", "age_hi", "tie_definition", "status", "y_hat", "d_bar_hat", "N_hat",
                        "D_hat", "M_hat", "message"});
    for (const auto& r : rates) {
      std::vector<std::string> row{r.group.label(), std::string(to_string(r.group.sex)), std::to_string(r.group.age_lo),
                                   std::to_string(r.group.age_hi), in.tie_definition, std::string(to_string(r.status))};
      if (r.estimate) {
        ++ok;
        const auto& e = *r.estimate;
        for (double v : {e.y_hat, e.d_bar_hat, e.N_hat, e.D_hat, e.M_hat}) row.push_back(csv::format_double(v));
      } else {
        row.insert(row.end(), 5, "NA");
      }
      row.push_back(r.message);
      csv::write_row(os, row);
    }
  });
  write_file_atomic(o.out, text);
  manifest.output(o.out);
  manifest.write(manifest_beside(o.out));
  out << "estimate: " << ok << "/" << rates.size() << " groups estimated from " << in.records.size()
      << " respondents (" << in.report.incomplete_death_reports << " incomplete death reports excluded) -> " << o.out
      << "\n";
  return 0;
}

int cmd_sibling(const Options& o, Manifest& manifest, std::ostream& out) {
  const EstimationConfig cfg = o.config.empty() ? EstimationConfig{} : load_estimation_config(o.config);
  manifest.config(o.config);
  const auto siblings = load_siblings(o.siblings);
  manifest.input(o.siblings);
  const auto periods = expand_sibling_histories(siblings, o.window_months, cfg.scheme, o.interview_cmc);
  const SiblingSample sample(siblings, periods, cfg.scheme);
  const auto rates = sample.rates(sample.weights());
  const std::string text = csv_text([&](std::ostream& os) {
    csv::write_row(os, {"group", "sex", "age_lo", "age_hi", "window_months", "deaths", "exposure_py", "rate"});
    for (const auto& r : rates) {
      csv::write_row(os, {r.group.label(), std::string(to_string(r.group.sex)), std::to_string(r.group.age_lo),
                          std::to_string(r.group.age_hi), std::to_string(o.window_months),
                          csv::format_double(r.deaths), csv::format_double(r.exposure_py), na_or(r.rate)});
    }
  });
  write_file_atomic(o.out, text);
  manifest.output(o.out);
  manifest.write(manifest_beside(o.out));
  out << "sibling: " << periods.size() << " person-periods from " << sample.units().size() << " respondents, "
      << o.window_months << "-month window -> " << o.out << "\n";
  return 0;
}

int cmd_lifetable(const Options& o, Manifest& manifest, std::ostream& out) {
  const auto rows = read_estimates(o.estimates);
  manifest.input(o.estimates);
  std::map<std::pair<std::string, Sex>, std::vector<RateBin>> schedules;
  for (const auto& r : rows) {
    auto& bins = schedules[{r.tie_definition.empty() ? o.tie_definition : r.tie_definition, r.sex}];
    if (r.rate) bins.push_back({static_cast<double>(r.age_lo), static_cast<double>(r.age_hi), *r.rate});
  }
  const std::string text = csv_text([&](std::ostream& os) {
    csv::write_row(os, {"sex", "tie_definition", "from_age", "to_age", "q_value"});
    for (const auto& [key, bins] : schedules) {
      const double q = conditional_q(RateSchedule(bins), o.from_age, o.to_age);
      csv::write_row(os, {std::string(to_string(key.second)), key.first, csv::format_double(o.from_age),
                          csv::format_double(o.to_age), csv::format_double(q)});
    }
  });
  write_file_atomic(o.out, text);
  manifest.output(o.out);
  manifest.write(manifest_beside(o.out));
  out << "lifetable: " << schedules.size() << " schedules, q over [" << o.from_age << "," << o.to_age << ") -> "
      << o.out << "\n";
  return 0;
}

/// Labels for the q slots appended after the group rates, when the scheme
/// covers [15, 60).
std::vector<std::string> q_labels(const GroupScheme& scheme) {
  if (scheme.min_age() > 15 || scheme.max_age() < 60) return {};
  return {"45q15 female", "45q15 male"};
}

std::vector<std::optional<double>> with_q(const GroupScheme& scheme, std::vector<std::optional<double>> rates) {
  if (q_labels(scheme).empty()) return rates;
  const std::size_t G = scheme.group_count();
  for (Sex sex : kSexes) {
    std::optional<double> q;
    if (const auto sched = schedule_for_sex(scheme, std::span(rates.data(), G), sex)) {
      try {
        q = conditional_q(*sched, 15.0, 60.0);
      } catch (const ScheduleError&) {
      }
    }
    rates.push_back(q);
  }
  return rates;
}

int cmd_bootstrap(const Options& o, Manifest& manifest, std::ostream& out) {
  if (!o.seed) throw ArgumentError("bootstrap needs --seed");
  manifest.seed(*o.seed);
  std::vector<std::string> labels;
  std::vector<double> base;
  SurveyDesign design;
  WeightedEstimator estimator;
  std::size_t units = 0;

  // Both branches keep their prepared data alive inside the estimator.
  if (!o.siblings.empty()) {
    const EstimationConfig cfg = o.config.empty() ? EstimationConfig{} : load_estimation_config(o.config);
    manifest.config(o.config);
    const auto siblings = load_siblings(o.siblings);
    manifest.input(o.siblings);
    const auto periods = expand_sibling_histories(siblings, o.window_months, cfg.scheme, o.interview_cmc);
    auto sample = std::make_shared<SiblingSample>(siblings, periods, cfg.scheme);
    design = SurveyDesign::from_units(sample->units());
    base = sample->weights();
    for (const auto& g : cfg.scheme.groups()) labels.push_back(g.label());
    for (auto& l : q_labels(cfg.scheme)) labels.push_back(l);
    estimator = [sample](std::span<const double> w) { return with_q(sample->scheme(), sample->rate_values(w)); };
    units = sample->units().size();
  } else {
    NetworkInputs in = load_network_inputs(o, manifest);
    auto prepared = std::make_shared<PreparedSample>(in.records, in.kp, in.config.scheme);
    design = SurveyDesign::from_records(in.records);
    base = weights_of(in.records);
    for (const auto& g : in.config.scheme.groups()) labels.push_back(g.label());
    for (auto& l : q_labels(in.config.scheme)) labels.push_back(l);
    std::optional<double> frame_size;
    if (in.totals.source == FrameTotals::Source::config) frame_size = in.totals.population;
    estimator = [prepared, frame_size](std::span<const double> w) {
      return with_q(prepared->scheme(), prepared->rate_values(w, frame_size));
    };
    units = in.records.size();
  }

  const auto reps = make_replicates(design, o.replicates, *o.seed);
  const auto results = bootstrap_estimate(estimator, base, reps, labels, o.level);
  std::size_t degenerate = 0;
  const std::string text = csv_text([&](std::ostream& os) {
    csv::write_row(os, {"label", "estimate", "lo", "hi", "level", "replicates", "failed_replicates", "degenerate"});
    for (const auto& e : results) {
      degenerate += e.degenerate ? 1 : 0;
      csv::write_row(os, {e.label, na_or(e.estimate), na_or(std::isnan(e.lo) ? std::nullopt : std::optional(e.lo)),
                          na_or(std::isnan(e.hi) ? std::nullopt : std::optional(e.hi)), csv::format_double(e.level),
                          std::to_string(e.replicates.size()), std::to_string(e.failed_replicates),
                          e.degenerate ? "true" : "false"});
    }
  });
  write_file_atomic(o.out, text);
  manifest.output(o.out);
  const fs::path out_path(o.out);
  PlotTables plots;
  plots.bootstrap = results;
  const fs::path dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
  for (const auto& p : emit_plot_tables(plots, dir, out_path.stem().string())) manifest.output(p);
  manifest.write(manifest_beside(o.out));
  out << "bootstrap: " << o.replicates << " replicates over " << units << " respondents in " << design.strata().size()
      << " strata, " << degenerate << " degenerate outputs -> " << o.out << "\n";
  return 0;
}

int cmd_sensitivity(const Options& o, Manifest& manifest, std::ostream& out) {
  const auto rows = read_estimates(o.estimates);
  manifest.input(o.estimates);
  const auto deltas = o.grid.empty() ? kDefaultGrid : parse_grid(o.grid);
  const auto ratios = o.eta_tau_grid.empty() ? deltas : parse_grid(o.eta_tau_grid);
  std::vector<std::optional<double>> m;
  std::vector<std::string> labels, ties;
  for (const auto& r : rows) {
    m.push_back(r.rate);
    labels.push_back(r.label);
    ties.push_back(r.tie_definition.empty() ? o.tie_definition : r.tie_definition);
  }
  PlotTables plots;
  plots.grid = sensitivity_grid(m, deltas, ratios);
  const std::string text = csv_text([&](std::ostream& os) { write_grid_table(os, plots.grid, labels, ties); });
  write_file_atomic(o.out, text);
  manifest.output(o.out);
  manifest.write(manifest_beside(o.out));
  out << "sensitivity: " << plots.grid.size() << " grid cells x " << rows.size() << " groups -> " << o.out << "\n";
  return 0;
}

int cmd_simulate(const Options& o, Manifest& manifest, std::ostream& out) {
  std::ifstream f(o.config);
  if (!f) throw ConfigError("cannot open config " + o.config);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config " + o.config + " is not valid JSON: " + e.what());
  }
  if (o.seed) j["seed"] = *o.seed;
  if (!j.contains("seed")) throw ArgumentError("simulate needs a seed (--seed or \"seed\" in the config)");
  const SimConfig config = parse_sim_config(j);
  manifest.config(o.config);
  manifest.seed(config.seed);
  const SampleDesign design = parse_sample_design(j.value("sample", json::object()));

  const SyntheticWorld world = generate_world(config);
  const SimulatedSample sample = draw_sample(world, design, config.seed);
  const auto kp = world.known_population_table();
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);

  json est;
  est["age_breaks"] = config.scheme.age_breaks();
  const auto fr = config.scheme.frame_rule();
  est["frame_age_range"] = {{"female", {fr.female.min_age, fr.female.max_age}},
                            {"male", {fr.male.min_age, fr.male.max_age}}};
  est["topcode_cap"] = nullptr;
  est["population_total"] = world.frame_size();
  est["tie_definition"] = config.tie_definition;

  const std::vector<std::pair<std::string, std::string>> files{
      {"respondents.csv", csv_text([&](std::ostream& os) { write_respondents(os, sample.records, kp); })},
      {"deaths.csv", csv_text([&](std::ostream& os) { write_deaths(os, sample.records); })},
      {"known_populations.csv", csv_text([&](std::ostream& os) { write_known_populations(os, kp); })},
      {"config.json", est.dump(2) + "\n"},
      {"truth.json", truth_to_json(world).dump(2) + "\n"},
  };
  for (const auto& [name, content] : files) {
    write_file_atomic(dir / name, content);
    manifest.output(dir / name);
  }
  manifest.write(dir / "manifest.json");
  out << "simulate: " << world.persons.size() << " people, frame " << world.frame_size() << ", "
      << world.reports.size() << " reports, " << sample.records.size() << " respondents -> " << o.out_dir << "\n";
  return 0;
}

int cmd_diagnose(const Options& o, Manifest& manifest, std::ostream& out) {
  // Deaths per interview is descriptive, so it is computed per tie definition
  // on the loaded rows before any filtering.
  const EstimationConfig cfg = o.config.empty() ? EstimationConfig{} : load_estimation_config(o.config);
  const KnownPopulationTable kp = load_known_populations(o.known_pops);
  std::optional<fs::path> deaths;
  if (!o.deaths.empty()) deaths = o.deaths;
  const SurveyTable all = load_respondents(o.respondents, deaths, &kp);
  std::map<std::string, std::vector<RespondentRecord>> by_tie;
  for (const auto& r : all.records) by_tie[r.tie_definition].push_back(r);

  const NetworkInputs in = load_network_inputs(o, manifest);
  const fs::path dir(o.out_dir);

  const std::string dpi = csv_text([&](std::ostream& os) {
    csv::write_row(os, {"tie_definition", "deaths", "interviews", "ratio"});
    for (const auto& [tie, recs] : by_tie) {
      const auto d = deaths_per_interview(recs);
      csv::write_row(os, {tie, std::to_string(d.deaths), std::to_string(d.interviews), csv::format_double(d.ratio)});
    }
  });
  const auto holdout = internal_consistency_holdout(in.records, in.kp);
  const std::string ho = csv_text([&](std::ostream& os) {
    csv::write_row(os, {"tie_definition", "population", "predicted", "known_size", "ratio"});
    for (const auto& h : holdout) {
      csv::write_row(os, {in.tie_definition, h.population, csv::format_double(h.predicted),
                          csv::format_double(h.known_size), csv::format_double(h.predicted / h.known_size)});
    }
  });
  const auto loo = loo_degree(in.records, in.kp, in.config.scheme, in.totals);
  const std::string lo = csv_text([&](std::ostream& os) {
    csv::write_row(os, {"tie_definition", "group", "held_out", "d_bar_hat"});
    for (const auto& row : loo) {
      csv::write_row(os, {in.tie_definition, row.group.label(), "none", na_or(row.baseline)});
      for (std::size_t j = 0; j < row.held_out.size(); ++j) {
        csv::write_row(os, {in.tie_definition, row.group.label(), in.kp.entries()[j].name, na_or(row.held_out[j])});
      }
    }
  });
  for (const auto& [name, content] : std::vector<std::pair<std::string, std::string>>{
           {"deaths_per_interview.csv", dpi}, {"holdout.csv", ho}, {"loo_degree.csv", lo}}) {
    write_file_atomic(dir / name, content);
    manifest.output(dir / name);
  }
  manifest.write(dir / "manifest.json");
  out << "diagnose: " << all.records.size() << " interviews, " << holdout.size() << " hold-out predictions, "
      << loo.size() << " groups -> " << o.out_dir << "\n";
  (void)cfg;
  return 0;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const ArgumentError*>(&e)) return "argument";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const EmptyCellError*>(&e)) return "empty_cell";
  if (dynamic_cast<const DegenerateVisibilityError*>(&e)) return "degenerate_visibility";
  if (dynamic_cast<const DesignError*>(&e)) return "design";
  if (dynamic_cast<const ScheduleError*>(&e)) return "schedule";
  return "runtime";
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network survival estimates of adult death rates from survey network reports", "netsurv"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NETSURV_VERSION);
  Options o;

  auto add_network = [&](CLI::App* s, bool with_out) {
    s->add_option("--config", o.config, "estimation config (JSON)");
    s->add_option("--respondents", o.respondents, "respondents.csv")->required();
    s->add_option("--deaths", o.deaths, "deaths.csv");
    s->add_option("--known-pops", o.known_pops, "known_populations.csv")->required();
    s->add_option("--tie-definition", o.tie_definition, "keep only respondents with this tie definition");
    if (with_out) s->add_option("--out", o.out, "output CSV")->required();
  };

  auto* estimate = app.add_subcommand("estimate", "per-group network survival death rates");
  add_network(estimate, true);

  auto* sibling = app.add_subcommand("sibling", "direct sibling survival death rates");
  sibling->add_option("--config", o.config, "estimation config (JSON), for the age groups");
  sibling->add_option("--siblings", o.siblings, "siblings.csv")->required();
  sibling->add_option("--window-months", o.window_months, "reference window in months")->check(CLI::PositiveNumber);
  sibling->add_option("--interview-cmc", o.interview_cmc, "interview date (CMC) for rows without interview_cmc");
  sibling->add_option("--out", o.out, "output CSV")->required();

  auto* lifetable = app.add_subcommand("lifetable", "conditional probability of dying from an estimates table");
  lifetable->add_option("--estimates", o.estimates, "estimates CSV from estimate or sibling")->required();
  lifetable->add_option("--from-age", o.from_age, "start age");
  lifetable->add_option("--to-age", o.to_age, "end age");
  lifetable->add_option("--tie-definition", o.tie_definition, "label for tables without a tie_definition column");
  lifetable->add_option("--out", o.out, "output CSV")->required();

  auto* bootstrap = app.add_subcommand("bootstrap", "rescaled bootstrap intervals");
  bootstrap->add_option("--config", o.config, "estimation config (JSON)");
  bootstrap->add_option("--respondents", o.respondents, "respondents.csv");
  bootstrap->add_option("--deaths", o.deaths, "deaths.csv");
  bootstrap->add_option("--known-pops", o.known_pops, "known_populations.csv");
  bootstrap->add_option("--siblings", o.siblings, "siblings.csv (bootstrap the sibling estimator instead)");
  bootstrap->add_option("--window-months", o.window_months, "sibling reference window in months");
  bootstrap->add_option("--interview-cmc", o.interview_cmc, "sibling interview date (CMC)");
  bootstrap->add_option("--tie-definition", o.tie_definition, "keep only respondents with this tie definition");
  bootstrap->add_option("--replicates", o.replicates, "number of replicates")->check(CLI::PositiveNumber);
  bootstrap->add_option("--seed", o.seed, "random seed")->required();
  bootstrap->add_option("--level", o.level, "interval level")->check(CLI::Range(0.0, 1.0));
  bootstrap->add_option("--out", o.out, "output CSV")->required();

  auto* sensitivity = app.add_subcommand("sensitivity", "adjusted rates over a grid of degree ratios and eta/tau");
  sensitivity->add_option("--estimates", o.estimates, "estimates CSV")->required();
  sensitivity->add_option("--grid", o.grid, "comma-separated values (default 0.5,1,1.5)");
  sensitivity->add_option("--eta-tau-grid", o.eta_tau_grid, "separate grid for eta/tau (default: same as --grid)");
  sensitivity->add_option("--tie-definition", o.tie_definition, "label for tables without a tie_definition column");
  sensitivity->add_option("--out", o.out, "output CSV")->required();

  auto* simulate = app.add_subcommand("simulate", "synthetic world with known truth plus a survey extract");
  simulate->add_option("--config", o.config, "simulation config (JSON)")->required();
  simulate->add_option("--seed", o.seed, "random seed (overrides the config)");
  simulate->add_option("--out-dir", o.out_dir, "output directory")->required();

  auto* diagnose = app.add_subcommand("diagnose", "deaths per interview, hold-out and leave-one-out checks");
  add_network(diagnose, false);
  diagnose->add_option("--out-dir", o.out_dir, "output directory")->required();

  std::vector<const char*> argv{"netsurv"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  Manifest manifest(name, args);
  try {
    if (name == "estimate") return cmd_estimate(o, manifest, out);
    if (name == "sibling") return cmd_sibling(o, manifest, out);
    if (name == "lifetable") return cmd_lifetable(o, manifest, out);
    if (name == "bootstrap") {
      if (o.siblings.empty() && (o.respondents.empty() || o.known_pops.empty())) {
        err << "netsurv bootstrap: usage error: give --respondents and --known-pops, or --siblings\n";
        return 2;
      }
      return cmd_bootstrap(o, manifest, out);
    }
    if (name == "sensitivity") return cmd_sensitivity(o, manifest, out);
    if (name == "simulate") return cmd_simulate(o, manifest, out);
    if (name == "diagnose") return cmd_diagnose(o, manifest, out);
  } catch (const std::exception& e) {
    err << "netsurv " << name << ": " << error_kind(e) << " error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace netsurv
