#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "skstein/experiments/config.hpp"
#include "skstein/experiments/fit.hpp"
#include "skstein/experiments/report.hpp"
#include "skstein/experiments/runners.hpp"
#include "skstein/mcmc.hpp"

using namespace skstein;
using namespace skstein::experiments;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Subset of JSON Schema used by the report schema: type, enum, required,
// properties, additionalProperties = false, items.
bool type_matches(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  return false;
}

void validate(const json& v, const json& schema, const std::string& path, std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    bool ok = false;
    if (schema["type"].is_array()) {
      for (const auto& t : schema["type"]) ok |= type_matches(v, t.get<std::string>());
    } else {
      ok = type_matches(v, schema["type"].get<std::string>());
    }
    if (!ok) {
      errors.push_back(path + ": wrong type");
      return;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found |= e == v;
    if (!found) errors.push_back(path + ": not in enum");
  }
  if (v.is_object()) {
    if (schema.contains("required")) {
      for (const auto& k : schema["required"]) {
        if (!v.contains(k.get<std::string>())) errors.push_back(path + ": missing " + k.get<std::string>());
      }
    }
    const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
    for (const auto& item : v.items()) {
      if (schema.contains("properties") && schema["properties"].contains(item.key())) {
        validate(item.value(), schema["properties"][item.key()], path + "." + item.key(), errors);
      } else if (closed) {
        errors.push_back(path + ": unexpected key " + item.key());
      }
    }
  }
  if (v.is_array() && schema.contains("items")) {
    for (std::size_t k = 0; k < v.size(); ++k) validate(v[k], schema["items"], path + "[" + std::to_string(k) + "]", errors);
  }
}

ExperimentConfig small(experiment_kind kind) {
  auto c = default_config(kind);
  c.n_list = {4, 6, 8};
  c.disorder_replications = 8;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SKSTEIN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("skstein_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config ingestion is strict") {
  const auto c = config_from_json(json::parse(R"({"experiment": "tap", "n_list": [6, 8, 10], "beta": 0.2})"));
  CHECK(c.experiment == experiment_kind::tap);
  CHECK(c.n_list == std::vector<std::size_t>{6, 8, 10});
  CHECK(c.beta == 0.2);
  CHECK(c.h == 0.3);
  CHECK(c.disorder_replications == 200);

  CHECK(config_from_json(json::parse(R"({"experiment": "r_law"})")).disorder_replications == 500);
  CHECK(config_from_json(json::parse(R"({"experiment": "hamiltonian"})")).h == 0.0);

  CHECK_THROWS_AS(config_from_json(json::parse(R"({"experiment": "tap", "betta": 0.2})")), skstein::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"experiment": "tap", "mcmc": {"sweeps": 3}})")), skstein::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"experiment": "nope"})")), skstein::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"n_list": [8]})")), skstein::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"experiment": "tap", "n_list": [-8]})")), skstein::invalid_argument);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"experiment": "tap", "beta": "x"})")), skstein::invalid_argument);

  const auto round = config_from_json(json::parse(to_json(c).dump()));
  CHECK(to_json(round) == to_json(c));
}

TEST_CASE("config validation") {
  auto c = default_config(experiment_kind::local_field);
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.n_list = {8, 8};
  CHECK_THROWS_AS(bad.validate(), skstein::invalid_argument);
  bad = c;
  bad.beta = -0.1;
  CHECK_THROWS_AS(bad.validate(), skstein::invalid_argument);
  bad = c;
  bad.disorder_replications = 1;
  CHECK_THROWS_AS(bad.validate(), skstein::invalid_argument);
  bad = c;
  bad.u_battery = {"nonsense"};
  CHECK_THROWS_AS(bad.validate(), skstein::invalid_argument);
  bad = c;
  bad.backend = backend_kind::mcmc;
  CHECK_THROWS_AS(bad.validate(), skstein::invalid_argument);
  bad = c;
  bad.n_list = {8, 25};
  CHECK_THROWS_AS(bad.validate(), skstein::capacity_exceeded);
}

TEST_CASE("fit_decay_exponent") {
  const std::vector<double> n{8, 12, 16, 20};
  std::vector<double> inv(4);
  std::vector<double> inv_sqrt(4);
  for (std::size_t k = 0; k < 4; ++k) {
    inv[k] = 3.0 / n[k];
    inv_sqrt[k] = 0.7 / std::sqrt(n[k]);
  }
  const auto a = fit_decay_exponent(n, inv);
  CHECK_THAT(a.slope, Catch::Matchers::WithinAbs(-1.0, 1e-12));
  CHECK_THAT(a.std_error, Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(a.intercept, Catch::Matchers::WithinAbs(std::log(3.0), 1e-12));
  CHECK_THAT(fit_decay_exponent(n, inv_sqrt).slope, Catch::Matchers::WithinAbs(-0.5, 1e-12));

  counter_stream rng(4, stream_id::auxiliary, 1);
  std::vector<double> noisy(4);
  for (std::size_t k = 0; k < 4; ++k) noisy[k] = inv[k] * (1.0 + 0.01 * rng.normal());
  const auto fit = fit_decay_exponent(n, noisy);
  CHECK(std::abs(fit.slope + 1.0) <= 0.05);
  CHECK(fit.std_error > 0.0);

  CHECK_THROWS_AS(fit_decay_exponent(std::vector<double>{8, 12}, std::vector<double>{1, 2}), skstein::invalid_argument);
  CHECK_THROWS_AS(fit_decay_exponent(n, std::vector<double>{1, 0, 1, 1}), skstein::invalid_argument);
}

TEST_CASE("report formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(std::nan("")) == "null");

  ScalingReport r;
  r.config = small(experiment_kind::tap);
  r.rows.push_back({8, 0.25, 0.01, 8, 42, nlohmann::ordered_json::object()});
  r.rows.push_back({12, 0.125, 0.005, 8, 42, nlohmann::ordered_json::object()});
  CHECK(series_csv(r) == "n,mean_sq_discrepancy,stderr,replications\n8,0.25,0.01,8\n12,0.125,0.0050000000000000001,8\n");
  const std::string text = dump_json(to_json(r));
  CHECK(text.find('\r') == std::string::npos);
  CHECK(text.back() == '\n');
  CHECK(json::parse(text)["rows"][1]["stderr"].get<double>() == 0.005);

  std::vector<std::size_t> excluded;
  const auto fit = fit_positive({{4, 0.0, 0.0}, {6, 1.0 / 6, 0.0}, {8, 0.125, 0.0}, {10, 0.1, 0.0}}, &excluded);
  REQUIRE(fit);
  CHECK(excluded == std::vector<std::size_t>{4});
  CHECK_THAT(fit->slope, Catch::Matchers::WithinAbs(-1.0, 1e-12));
  CHECK_FALSE(fit_positive({{4, 0.0, 0.0}, {6, 1e-30, 0.0}, {8, 0.1, 0.0}}));
}

TEST_CASE("reports validate against the schema") {
  const json schema = json::parse(slurp(SKSTEIN_SCHEMA_PATH));
  for (auto kind : {experiment_kind::local_field, experiment_kind::tap, experiment_kind::cavity, experiment_kind::hamiltonian,
                    experiment_kind::r_law, experiment_kind::high_temp_diagnostic}) {
    auto c = small(kind);
    if (kind == experiment_kind::r_law) c.disorder_replications = 4;
    const auto report = run_experiment(c);
    std::vector<std::string> errors;
    validate(json::parse(dump_json(to_json(report))), schema, "$", errors);
    INFO(to_string(kind) << ": " << (errors.empty() ? "" : errors.front()));
    CHECK(errors.empty());
  }
  auto lemma = default_config(experiment_kind::approx_lemma);
  lemma.disorder_replications = 20;
  std::vector<std::string> errors;
  validate(json::parse(dump_json(to_json(run_experiment(lemma)))), schema, "$", errors);
  CHECK(errors.empty());
}

TEST_CASE("experiment outputs are byte-identical on re-run") {
  for (auto kind : {experiment_kind::local_field, experiment_kind::tap, experiment_kind::high_temp_diagnostic}) {
    const auto c = small(kind);
    const auto a = run_experiment(c);
    const auto b = run_experiment(c, RunOptions{3});
    CHECK(dump_json(to_json(a)) == dump_json(to_json(b)));
    CHECK(series_csv(a) == series_csv(b));
  }
  const auto dir_a = scratch("det_a");
  const auto dir_b = scratch("det_b");
  const auto c = small(experiment_kind::cavity);
  write_report(run_experiment(c), dir_a);
  write_report(run_experiment(c), dir_b);
  CHECK(slurp(dir_a / "report.json") == slurp(dir_b / "report.json"));
  CHECK(slurp(dir_a / "series.csv") == slurp(dir_b / "series.csv"));
  CHECK(std::filesystem::exists(dir_a / "runtime.json"));

  auto other = c;
  other.master_seed += 1;
  CHECK(dump_json(to_json(run_experiment(other))) != slurp(dir_a / "report.json"));
}

TEST_CASE("rows at one N share disorder across experiments with the same seed") {
  auto c = small(experiment_kind::tap);
  c.n_list = {6, 8, 10};
  const auto a = run_experiment(c);
  c.n_list = {8, 10, 12};
  const auto b = run_experiment(c);
  CHECK(a.rows[1].mean_sq_discrepancy == b.rows[0].mean_sq_discrepancy);
  CHECK(a.rows[0].row_seed == b.rows[0].row_seed);
}

TEST_CASE("decoupled corners") {
  SECTION("local field at beta = 0 is exact for the tanh member") {
    auto c = small(experiment_kind::local_field);
    c.beta = 0.0;
    c.u_battery = {"tanh"};
    for (const auto& row : run_experiment(c).rows) CHECK(row.mean_sq_discrepancy <= 1e-24);
  }
  SECTION("TAP identity holds exactly at beta = 0") {
    auto c = small(experiment_kind::tap);
    c.beta = 0.0;
    c.h = 0.5;
    const auto r = run_experiment(c);
    for (const auto& row : r.rows) CHECK(row.mean_sq_discrepancy <= 1e-24);
    CHECK_FALSE(r.fit);
    CHECK(r.excluded_zero_rows.size() == 3);
  }
  SECTION("cavity at beta = 0, h = 0 with an odd u") {
    auto c = small(experiment_kind::cavity);
    c.beta = 0.0;
    c.h = 0.0;
    c.u_battery = {"sin"};
    for (const auto& row : run_experiment(c).rows) CHECK(row.mean_sq_discrepancy <= 1e-24);
  }
  SECTION("fourth overlap moment at beta = 0, h = 0") {
    auto c = small(experiment_kind::high_temp_diagnostic);
    c.beta = 0.0;
    c.h = 0.0;
    for (const auto& row : run_experiment(c).rows) {
      const double n = static_cast<double>(row.n);
      CHECK_THAT(row.mean_sq_discrepancy, Catch::Matchers::WithinAbs((3 * n - 2) / (n * n * n), 1e-14));
    }
  }
}

TEST_CASE("cavity linearity check passes") {
  const auto r = run_experiment(small(experiment_kind::cavity));
  bool found = false;
  for (const auto& c : r.checks) {
    if (c.name.find("linearity") != std::string::npos) {
      found = true;
      CHECK(c.status == check_status::pass);
    }
  }
  CHECK(found);
}

TEST_CASE("theorem scope is enforced") {
  auto h = small(experiment_kind::hamiltonian);
  h.h = 0.1;
  CHECK_THROWS_AS(run_experiment(h), skstein::invalid_argument);
  h.h = 0.0;
  h.beta = 1.0;
  CHECK_THROWS_AS(run_experiment(h), skstein::invalid_argument);
  auto r = small(experiment_kind::r_law);
  r.h = 0.0;
  CHECK_THROWS_AS(run_experiment(r), skstein::invalid_argument);
  auto lemma = default_config(experiment_kind::approx_lemma);
  lemma.n_list = {16};
  CHECK_THROWS_AS(run_experiment(lemma), skstein::capacity_exceeded);
}

TEST_CASE("hamiltonian corner near beta = 0 records raw values without checks") {
  auto c = small(experiment_kind::hamiltonian);
  c.beta = 0.01;
  const auto r = run_experiment(c);
  CHECK(r.rows.size() == 3);
  for (const auto& check : r.checks) CHECK(check.status == check_status::skipped);
}

TEST_CASE("exact and mcmc backends agree at N = 10") {
  auto c = default_config(experiment_kind::high_temp_diagnostic);
  c.n_list = {6, 8, 10};
  c.disorder_replications = 4;
  const auto exact = run_experiment(c);
  c.backend = backend_kind::mcmc;
  c.mcmc = {500, 5, 4000};
  const auto mcmc = run_experiment(c);
  for (std::size_t k = 0; k < 3; ++k) {
    const double combined = std::hypot(exact.rows[k].std_error, mcmc.rows[k].std_error);
    INFO("N = " << exact.rows[k].n << " exact " << exact.rows[k].mean_sq_discrepancy << " mcmc "
                << mcmc.rows[k].mean_sq_discrepancy);
    CHECK(std::abs(exact.rows[k].mean_sq_discrepancy - mcmc.rows[k].mean_sq_discrepancy) <= 4.0 * combined);
  }
}

TEST_CASE("stein selftest passes") {
  const auto r = run_experiment(default_config(experiment_kind::stein_selftest));
  for (const auto& c : r.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.status == check_status::pass);
  }
}

TEST_CASE("command-line exit codes") {
  CHECK(run_cli("q-solve --beta 0.25 --h 0.3") == 0);
  CHECK(run_cli("q-solve --beta 1.5 --h 0") == 2);
  CHECK(run_cli("q-solve --beta -1 --h 0") == 2);
  CHECK(run_cli("no-such-command") == 2);
  CHECK(run_cli("experiment no_such_experiment") == 2);
  const auto out = scratch("cli");
  CHECK(run_cli("experiment tap --n 4,6,8 --reps 4 --out " + out.string()) == 0);
  CHECK(std::filesystem::exists(out / "report.json"));
  CHECK(std::filesystem::exists(out / "series.csv"));
  CHECK(run_cli("experiment tap --n 8,30 --reps 4 --out " + out.string()) == 3);
  CHECK(run_cli("experiment hamiltonian --h 0.2 --n 4,6,8 --reps 4 --out " + out.string()) == 2);
  // Two replications are too few for a decreasing series at this seed.
  CHECK(run_cli("experiment local_field --n 4,5,6 --reps 2 --seed 5 --assert --out " + out.string()) == 5);
  CHECK(run_cli("experiment local_field --n 4,5,6 --reps 2 --seed 5 --out " + out.string()) == 0);
  CHECK(run_cli("experiment tap --n 4,6,8 --reps 4 --beta 0 --h 0.5 --assert --out " + out.string()) == 0);
  CHECK(run_cli("stein-selftest --assert --out " + out.string()) == 0);
}
