// Command-line front end for the solvers and the scaling experiments.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "skstein/skstein.hpp"

namespace ex = skstein::experiments;

namespace {

enum exit_code : int { ok = 0, failure = 1, bad_config = 2, capacity = 3, no_convergence = 4, assert_failed = 5 };

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string n_list;
  std::optional<double> beta;
  std::optional<double> h;
  std::optional<std::size_t> reps;
  std::string backend;
  std::size_t threads = 0;
  bool assert_checks = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->set_help_flag("--help", "print help");
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--seed", f.seed, "master seed (u64)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--n", f.n_list, "comma-separated system sizes");
  cmd->add_option("--beta", f.beta, "inverse temperature");
  cmd->add_option("--h", f.h, "external field");
  cmd->add_option("--reps", f.reps, "disorder replications");
  cmd->add_option("--backend", f.backend, "exact or mcmc");
  cmd->add_option("--threads", f.threads, "worker threads (0: hardware concurrency)");
  cmd->add_flag("--assert", f.assert_checks, "exit with status 5 when an acceptance check fails");
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      throw skstein::invalid_argument("--n: '" + item + "' is not a positive integer");
    }
    if (used != item.size() || item.empty() || item[0] == '-') {
      throw skstein::invalid_argument("--n: '" + item + "' is not a positive integer");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw skstein::invalid_argument("--n: empty list");
  return out;
}

std::size_t resolve_threads(std::size_t flag) {
  if (const char* env = std::getenv("SK_STEIN_THREADS")) {
    try {
      const unsigned long v = std::stoul(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
    throw skstein::invalid_argument("SK_STEIN_THREADS must be a positive integer");
  }
  if (flag > 0) return flag;
  return std::max(1u, std::thread::hardware_concurrency());
}

ex::ExperimentConfig build_config(ex::experiment_kind kind, const CommonFlags& f) {
  ex::ExperimentConfig cfg = f.config_path.empty() ? ex::default_config(kind) : ex::load_config(f.config_path, kind);
  if (cfg.experiment != kind) {
    throw skstein::invalid_argument("config names experiment '" + std::string(ex::to_string(cfg.experiment)) +
                                    "' but '" + std::string(ex::to_string(kind)) + "' was requested");
  }
  if (f.seed) cfg.master_seed = *f.seed;
  if (!f.n_list.empty()) cfg.n_list = parse_n_list(f.n_list);
  if (f.beta) cfg.beta = *f.beta;
  if (f.h) cfg.h = *f.h;
  if (f.reps) cfg.disorder_replications = *f.reps;
  if (!f.backend.empty()) cfg.backend = ex::parse_backend(f.backend);
  cfg.validate();
  return cfg;
}

void print_summary(const ex::ScalingReport& r, std::ostream& out) {
  out << "experiment " << ex::to_string(r.config.experiment);
  if (r.q) out << "  q = " << ex::format_double(*r.q);
  out << '\n';
  for (const auto& row : r.rows) {
    out << "  N = " << row.n << "  value = " << ex::format_double(row.mean_sq_discrepancy)
        << "  stderr = " << ex::format_double(row.std_error) << '\n';
  }
  if (r.fit) out << "  slope = " << r.fit->slope << " +/- " << r.fit->std_error << '\n';
  for (const auto& c : r.checks) out << "  [" << ex::to_string(c.status) << "] " << c.name << "  " << c.detail << '\n';
  out << "  runtime " << r.runtime_seconds << " s\n";
}

int run_experiment_command(ex::experiment_kind kind, const CommonFlags& f) {
  const ex::ExperimentConfig cfg = build_config(kind, f);
  const ex::ScalingReport report = ex::run_experiment(cfg, {resolve_threads(f.threads)});
  const std::filesystem::path dir =
      f.out_dir.empty() ? std::filesystem::path("out") / ex::to_string(kind) : std::filesystem::path(f.out_dir);
  ex::write_report(report, dir);
  print_summary(report, std::cout);
  std::cout << "  wrote " << (dir / "report.json").string() << '\n';
  if (f.assert_checks && !report.all_checks_pass()) return assert_failed;
  return ok;
}

int q_solve(double beta, double h) {
  const skstein::QSolution s = skstein::q_fixed_point(beta, h);
  nlohmann::ordered_json j{{"beta", beta}, {"h", h}, {"q", s.q}, {"iterations", s.iterations}, {"residual", s.residual}};
  std::cout << ex::dump_json(j);
  return ok;
}

int tap_solve(const CommonFlags& f) {
  const std::size_t n = f.n_list.empty() ? 12 : parse_n_list(f.n_list).front();
  const double beta = f.beta.value_or(0.25);
  const double h = f.h.value_or(0.3);
  const std::uint64_t seed = f.seed.value_or(1);
  const skstein::ModelParams params{n, beta, h};
  params.validate();
  const double q = skstein::q_fixed_point(beta, h).q;
  const skstein::DisorderMatrix g = skstein::sample_disorder(n, seed);
  const skstein::TapSolution sol = skstein::tap_iterate(g, params, q);
  nlohmann::ordered_json j{{"n", n},           {"beta", beta},          {"h", h},
                           {"seed", seed},     {"q", q},                {"iterations", sol.iterations},
                           {"converged", sol.converged}, {"residual_sup", sol.residual_sup}, {"m", sol.m}};
  if (n <= skstein::max_enumeration_sites) {
    j["tap_vs_exact"] = skstein::tap_vs_exact(sol, skstein::build_exact_gibbs(params, g));
  }
  const std::string text = ex::dump_json(j);
  if (!f.out_dir.empty()) {
    std::filesystem::create_directories(f.out_dir);
    ex::write_file(std::filesystem::path(f.out_dir) / "tap.json", text);
  }
  std::cout << text;
  return sol.converged ? ok : no_convergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SK model Stein-method experiments"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);

  double q_beta = 0.25;
  double q_h = 0.3;
  auto* q_cmd = app.add_subcommand("q-solve", "solve q = E tanh^2(beta z sqrt(q) + h)");
  q_cmd->set_help_flag("--help", "print help");
  q_cmd->add_option("--beta", q_beta, "inverse temperature");
  q_cmd->add_option("--h", q_h, "external field");

  CommonFlags tap_flags;
  auto* tap_cmd = app.add_subcommand("tap-solve", "iterate the TAP equations for one disorder sample");
  add_common(tap_cmd, tap_flags);

  CommonFlags exp_flags;
  std::string exp_name;
  auto* exp_cmd = app.add_subcommand("experiment", "run a scaling experiment");
  exp_cmd->add_option("name", exp_name, "experiment name")->required();
  add_common(exp_cmd, exp_flags);

  CommonFlags self_flags;
  auto* self_cmd = app.add_subcommand("stein-selftest", "run the exact-identity suite");
  add_common(self_cmd, self_flags);

  CommonFlags lemma_flags;
  auto* lemma_cmd = app.add_subcommand("approx-lemma", "second-moment identity on the SK quenched fields");
  add_common(lemma_cmd, lemma_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_config;
  }

  try {
    if (q_cmd->parsed()) return q_solve(q_beta, q_h);
    if (tap_cmd->parsed()) return tap_solve(tap_flags);
    if (exp_cmd->parsed()) return run_experiment_command(ex::parse_experiment(exp_name), exp_flags);
    if (self_cmd->parsed()) return run_experiment_command(ex::experiment_kind::stein_selftest, self_flags);
    if (lemma_cmd->parsed()) return run_experiment_command(ex::experiment_kind::approx_lemma, lemma_flags);
  } catch (const skstein::capacity_exceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return capacity;
  } catch (const skstein::convergence_failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return no_convergence;
  } catch (const skstein::ambiguous_root& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bad_config;
  } catch (const skstein::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bad_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
  return failure;
}
