#pragma once

#include <unistd.h>

#include <cmath>
#include <map>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "netsurv/survey_data.hpp"

namespace testing {

inline bool close_rel(double a, double b, double tol) {
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

inline netsurv::DeathReport death(int age, netsurv::Sex sex) { return {age, sex, ""}; }

inline netsurv::RespondentRecord respondent(std::string id, double w, int age, netsurv::Sex sex,
                                            std::map<std::string, long long> kp = {},
                                            std::vector<netsurv::DeathReport> deaths = {}) {
  netsurv::RespondentRecord r;
  r.respondent_id = std::move(id);
  r.stratum_id = "s";
  r.psu_id = "p";
  r.weight = w;
  r.age = age;
  r.sex = sex;
  r.tie_definition = "meal";
  r.kp_connections = std::move(kp);
  r.death_reports = std::move(deaths);
  return r;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("netsurv-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    std::ofstream(path_ / name) << content;
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

/// Random sample of respondents across the default scheme's ages, with
/// reports to four known populations and some deaths.
inline std::vector<netsurv::RespondentRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  using netsurv::Sex;
  std::uniform_int_distribution<int> age(15, 64), k(0, 12), nd(0, 2);
  std::uniform_real_distribution<double> w(0.5, 20.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<netsurv::RespondentRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<netsurv::DeathReport> d;
    for (int j = nd(rng); j > 0; --j) d.push_back(death(age(rng), coin(rng) ? Sex::female : Sex::male));
    out.push_back(respondent("r" + std::to_string(i), w(rng), age(rng), coin(rng) ? Sex::female : Sex::male,
                             {{"a", k(rng) + 1}, {"b", k(rng)}, {"c", k(rng)}, {"d", k(rng)}}, std::move(d)));
    out.back().stratum_id = "s" + std::to_string(i % 3);
    out.back().psu_id = "p" + std::to_string(i % 7);
  }
  return out;
}

inline netsurv::KnownPopulationTable four_pops() {
  return netsurv::KnownPopulationTable({{"a", 5000}, {"b", 3000}, {"c", 1500}, {"d", 500}});
}

}  // namespace testing
