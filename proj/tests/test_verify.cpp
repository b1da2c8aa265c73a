#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "mfh/error.hpp"
#include "mfh/io.hpp"
#include "mfh/verify.hpp"

using namespace mfh;
using Catch::Approx;

namespace {

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    out.push_back(cells);
  }
  return out;
}

}  // namespace

TEST_CASE("registry and experiment list") {
  const auto names = pipeline_names();
  CHECK(std::is_sorted(names.begin(), names.end()));
  const auto acc = acceptance_experiments();
  CHECK(acc.size() == 14);
  std::set<std::string> seen;
  for (const auto& e : all_experiments()) {
    CHECK_NOTHROW(pipeline(e.name));
    CHECK_FALSE(e.criteria.empty());
    CHECK(seen.insert(e.name).second);
  }
  CHECK_THROWS_AS(find_experiment("no-such-thing"), ValidationError);
  CHECK_THROWS_AS(pipeline("no-such-thing"), ValidationError);
}

TEST_CASE("criteria are evaluated with their comparators") {
  auto e = find_experiment("variance-scaling-d1");
  const auto rep = run_experiment(e);
  CHECK(rep.pass);
  CHECK(rep.results.size() == 1);
  CHECK(rep.results[0].value <= 1e-3);

  e.criteria = {{"a", "ratio_error", "lt", 0.0, 0.0}};
  CHECK_FALSE(run_experiment(e).pass);
  e.criteria = {{"a", "ratio_error", "within", 0.0, 1e-3}};
  CHECK(run_experiment(e).pass);
  e.criteria = {{"a", "ratio_error", "about", 0.0, 0.0}};
  CHECK_THROWS_AS(run_experiment(e), ValidationError);
  e.criteria = {{"a", "nothing", "le", 0.0, 0.0}};
  CHECK_THROWS_AS(run_experiment(e), ValidationError);
  e.criteria.clear();
  CHECK_THROWS_AS(run_experiment(e), ValidationError);
}

TEST_CASE("verdict JSON is reproducible and carries provenance") {
  const auto e = find_experiment("variance-constant");
  const auto a = run_experiment(e), b = run_experiment(e);
  CHECK(a.to_json().dump() == b.to_json().dump());
  const auto j = a.to_json(true);
  CHECK(j["provenance"]["library_version"] == kLibraryVersion);
  CHECK(j["provenance"]["config_hash"] == config_hash(e.config));
  CHECK(j["provenance"].contains("wall_seconds"));
  CHECK_FALSE(a.to_json()["provenance"].contains("wall_seconds"));
  CHECK(a.table().find("PASS") != std::string::npos);
}

TEST_CASE("config hash is stable and sensitive") {
  const nlohmann::json c{{"h", 0.75}, {"d", 2}};
  CHECK(config_hash(c) == config_hash(nlohmann::json{{"d", 2}, {"h", 0.75}}));
  CHECK(config_hash(c) != config_hash(nlohmann::json{{"d", 2}, {"h", 0.7501}}));
  CHECK(config_hash(c).size() == 16);
}

TEST_CASE("sweep over the variance constant follows the closed form") {
  const auto csv = sweep("h", {0.6, 0.7, 0.8, 0.9}, find_experiment("variance-constant"));
  const auto r = rows(csv);
  REQUIRE(r.size() == 5);
  CHECK(r[0] == std::vector<std::string>{"param", "value", "norm", "stderr"});
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double h = std::stod(r[i][1]);
    const double ref =
        std::pow(std::tgamma(h + 0.5), 2) / (std::tgamma(2 * h + 1) * std::sin(M_PI * h)) / std::pow(h - 0.5, 2);
    CHECK(r[i][0] == "h");
    CHECK(std::stod(r[i][2]) == Approx(ref).epsilon(1e-6));
    CHECK(std::stod(r[i][3]) <= 1e-6 * ref);
  }
}

TEST_CASE("sweep over the far-field cutoff") {
  const auto csv = sweep("M", {1, 2, 4, 8, 16}, find_experiment("decomposition-norm"));
  const auto r = rows(csv);
  REQUIRE(r.size() == 6);
  for (std::size_t i = 2; i < r.size(); ++i) CHECK(std::stod(r[i][2]) < std::stod(r[i - 1][2]));
  CHECK_THROWS_AS(sweep("M", {}, find_experiment("decomposition-norm")), ValidationError);
  CHECK_THROWS_AS(sweep("q", {1.0}, find_experiment("decomposition-norm")), ValidationError);
}
