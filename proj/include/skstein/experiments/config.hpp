#pragma once

// Experiment configuration: per-experiment defaults, strict JSON ingestion
// (unknown keys are errors) and validation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skstein/errors.hpp"
#include "skstein/sk_model.hpp"
#include "skstein/test_functions.hpp"

namespace skstein::experiments {

enum class experiment_kind { local_field, tap, cavity, hamiltonian, r_law, high_temp_diagnostic, approx_lemma, stein_selftest };
enum class backend_kind { exact, mcmc };

inline constexpr std::string_view experiment_names[] = {"local_field",          "tap",          "cavity",
                                                        "hamiltonian",          "r_law",        "high_temp_diagnostic",
                                                        "approx_lemma",         "stein_selftest"};

inline std::string_view to_string(experiment_kind e) { return experiment_names[static_cast<int>(e)]; }
inline std::string_view to_string(backend_kind b) { return b == backend_kind::exact ? "exact" : "mcmc"; }

inline experiment_kind parse_experiment(std::string_view name) {
  for (std::size_t k = 0; k < std::size(experiment_names); ++k) {
    if (experiment_names[k] == name) return static_cast<experiment_kind>(k);
  }
  throw invalid_argument("unknown experiment '" + std::string(name) + "'");
}

inline backend_kind parse_backend(std::string_view name) {
  if (name == "exact") return backend_kind::exact;
  if (name == "mcmc") return backend_kind::mcmc;
  throw invalid_argument("unknown backend '" + std::string(name) + "'");
}

struct McmcOptions {
  std::size_t burnin = 1000;
  std::size_t thin = 10;
  std::size_t draws = 10000;
};

struct TapOptions {
  double damping = 0.5;
  double tol = 1e-12;
  std::size_t max_iter = 10000;
};

struct ExperimentConfig {
  experiment_kind experiment = experiment_kind::local_field;
  std::vector<std::size_t> n_list;
  double beta = 0.25;
  double h = 0.3;
  std::size_t disorder_replications = 200;
  std::vector<std::string> u_battery;
  std::uint64_t master_seed = 20240601;
  backend_kind backend = backend_kind::exact;
  McmcOptions mcmc;
  TapOptions tap;

  void validate() const;
};

inline ExperimentConfig default_config(experiment_kind e) {
  ExperimentConfig c;
  c.experiment = e;
  c.n_list = {8, 12, 16, 20};
  c.u_battery = default_battery_names();
  switch (e) {
    case experiment_kind::hamiltonian:
      c.beta = 0.5;
      c.h = 0.0;
      break;
    case experiment_kind::r_law:
      c.disorder_replications = 500;
      break;
    case experiment_kind::approx_lemma:
      c.n_list = {8};
      c.u_battery = {"tanh"};
      break;
    case experiment_kind::stein_selftest:
      c.n_list = {};
      break;
    default:
      break;
  }
  return c;
}

inline void ExperimentConfig::validate() const {
  if (!std::isfinite(beta) || beta < 0.0) throw invalid_argument("config: beta must be finite and >= 0");
  if (!std::isfinite(h)) throw invalid_argument("config: h must be finite");
  if (disorder_replications < 2) throw invalid_argument("config: disorder_replications must be >= 2");
  if (experiment != experiment_kind::stein_selftest && n_list.empty()) {
    throw invalid_argument("config: n_list must not be empty");
  }
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    if (n_list[k] < 2) throw invalid_argument("config: every N in n_list must be >= 2");
    if (k > 0 && n_list[k] <= n_list[k - 1]) throw invalid_argument("config: n_list must be strictly increasing");
  }
  if (u_battery.empty()) throw invalid_argument("config: u_battery must not be empty");
  for (const auto& name : u_battery) make_test_function(name, beta, h);
  if (mcmc.thin == 0 || mcmc.draws < 100) throw invalid_argument("config: mcmc.thin >= 1 and mcmc.draws >= 100 required");
  if (!(tap.damping > 0.0 && tap.damping <= 1.0)) throw invalid_argument("config: tap.damping must lie in (0, 1]");
  if (!(tap.tol > 0.0) || tap.max_iter == 0) throw invalid_argument("config: tap.tol and tap.max_iter must be positive");

  if (backend == backend_kind::mcmc && experiment != experiment_kind::high_temp_diagnostic) {
    throw invalid_argument("config: backend mcmc is only available for high_temp_diagnostic");
  }
  // Capacity is checked last so that malformed configs report as invalid first.
  if (backend == backend_kind::exact && !n_list.empty() && n_list.back() > max_enumeration_sites) {
    throw capacity_exceeded("config: backend exact requires max(n_list) <= 24");
  }
}

namespace detail {

template <class T>
T read_unsigned(const nlohmann::json& j, const char* key) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    throw invalid_argument(std::string("config: '") + key + "' must be a non-negative integer");
  }
  return static_cast<T>(j.get<std::uint64_t>());
}

inline double read_real(const nlohmann::json& j, const char* key) {
  if (!j.is_number()) throw invalid_argument(std::string("config: '") + key + "' must be a number");
  return j.get<double>();
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, const char* where) {
  if (!j.is_object()) throw invalid_argument(std::string("config: ") + where + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw invalid_argument(std::string("config: unknown key '") + item.key() + "' in " + where);
    }
  }
}

}  // namespace detail

// Starts from the defaults of the named experiment (or `fallback`) and applies
// every key present in `j`.
inline ExperimentConfig config_from_json(const nlohmann::json& j,
                                         std::optional<experiment_kind> fallback = std::nullopt) {
  using detail::read_real;
  using detail::read_unsigned;
  detail::reject_unknown(j,
                         {"experiment", "n_list", "beta", "h", "disorder_replications", "u_battery", "master_seed",
                          "backend", "mcmc", "tap"},
                         "config");
  experiment_kind kind = fallback.value_or(experiment_kind::local_field);
  if (j.contains("experiment")) {
    if (!j["experiment"].is_string()) throw invalid_argument("config: 'experiment' must be a string");
    kind = parse_experiment(j["experiment"].get<std::string>());
  } else if (!fallback) {
    throw invalid_argument("config: 'experiment' is required");
  }
  ExperimentConfig c = default_config(kind);
  if (j.contains("n_list")) {
    if (!j["n_list"].is_array()) throw invalid_argument("config: 'n_list' must be an array");
    c.n_list.clear();
    for (const auto& n : j["n_list"]) c.n_list.push_back(read_unsigned<std::size_t>(n, "n_list"));
  }
  if (j.contains("beta")) c.beta = read_real(j["beta"], "beta");
  if (j.contains("h")) c.h = read_real(j["h"], "h");
  if (j.contains("disorder_replications")) {
    c.disorder_replications = read_unsigned<std::size_t>(j["disorder_replications"], "disorder_replications");
  }
  if (j.contains("u_battery")) {
    if (!j["u_battery"].is_array()) throw invalid_argument("config: 'u_battery' must be an array");
    c.u_battery.clear();
    for (const auto& u : j["u_battery"]) {
      if (!u.is_string()) throw invalid_argument("config: 'u_battery' entries must be strings");
      c.u_battery.push_back(u.get<std::string>());
    }
  }
  if (j.contains("master_seed")) c.master_seed = read_unsigned<std::uint64_t>(j["master_seed"], "master_seed");
  if (j.contains("backend")) {
    if (!j["backend"].is_string()) throw invalid_argument("config: 'backend' must be a string");
    c.backend = parse_backend(j["backend"].get<std::string>());
  }
  if (j.contains("mcmc")) {
    const auto& m = j["mcmc"];
    detail::reject_unknown(m, {"burnin", "thin", "draws"}, "mcmc");
    if (m.contains("burnin")) c.mcmc.burnin = read_unsigned<std::size_t>(m["burnin"], "mcmc.burnin");
    if (m.contains("thin")) c.mcmc.thin = read_unsigned<std::size_t>(m["thin"], "mcmc.thin");
    if (m.contains("draws")) c.mcmc.draws = read_unsigned<std::size_t>(m["draws"], "mcmc.draws");
  }
  if (j.contains("tap")) {
    const auto& t = j["tap"];
    detail::reject_unknown(t, {"damping", "tol", "max_iter"}, "tap");
    if (t.contains("damping")) c.tap.damping = read_real(t["damping"], "tap.damping");
    if (t.contains("tol")) c.tap.tol = read_real(t["tol"], "tap.tol");
    if (t.contains("max_iter")) c.tap.max_iter = read_unsigned<std::size_t>(t["max_iter"], "tap.max_iter");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path, std::optional<experiment_kind> fallback = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw invalid_argument("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw invalid_argument(std::string("config: ") + e.what());
  }
  return config_from_json(j, fallback);
}

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["experiment"] = std::string(to_string(c.experiment));
  j["n_list"] = c.n_list;
  j["beta"] = c.beta;
  j["h"] = c.h;
  j["disorder_replications"] = c.disorder_replications;
  j["u_battery"] = c.u_battery;
  j["master_seed"] = c.master_seed;
  j["backend"] = std::string(to_string(c.backend));
  j["mcmc"] = {{"burnin", c.mcmc.burnin}, {"thin", c.mcmc.thin}, {"draws", c.mcmc.draws}};
  j["tap"] = {{"damping", c.tap.damping}, {"tol", c.tap.tol}, {"max_iter", c.tap.max_iter}};
  return j;
}

}  // namespace skstein::experiments
