#pragma once

// Sherrington-Kirkpatrick model at desk scale: disorder, Gibbs weights, and
// every quenched quantity by exhaustive enumeration of {-1,+1}^N.
//
// Configuration indexing: bit i of the index is (sigma_i + 1) / 2.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skstein/alias_table.hpp"
#include "skstein/errors.hpp"
#include "skstein/mixture.hpp"
#include "skstein/rng.hpp"
#include "skstein/stats.hpp"

namespace skstein {

inline constexpr std::size_t max_enumeration_sites = 24;

struct ModelParams {
  std::size_t n_sites = 2;
  double beta = 0.0;
  double h = 0.0;

  void validate() const {
    if (n_sites < 2) throw invalid_argument("ModelParams: n_sites must be at least 2");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw invalid_argument("ModelParams: beta must be finite and >= 0");
    if (!std::isfinite(h)) throw invalid_argument("ModelParams: h must be finite");
  }
};

// Upper-triangular couplings g_ij, i < j, stored row-major.
class DisorderMatrix {
 public:
  DisorderMatrix() = default;

  DisorderMatrix(std::size_t n_sites, std::vector<double> couplings, std::uint64_t seed = 0)
      : n_(n_sites), seed_(seed), g_(std::move(couplings)) {
    if (n_ < 2) throw invalid_argument("DisorderMatrix: n_sites must be at least 2");
    if (g_.size() != n_ * (n_ - 1) / 2) throw invalid_argument("DisorderMatrix: expected N(N-1)/2 couplings");
  }

  std::size_t n_sites() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const double> couplings() const& { return g_; }
  std::span<const double> couplings() const&& = delete;

  // g_ij for i != j; (i, j) and (j, i) address the same entry.
  double operator()(std::size_t i, std::size_t j) const {
    if (i == j || i >= n_ || j >= n_) throw invalid_argument("DisorderMatrix: invalid pair index");
    return g_[flat_index(std::min(i, j), std::max(i, j))];
  }

  DisorderMatrix with_coupling(std::size_t i, std::size_t j, double value) const {
    if (i == j || i >= n_ || j >= n_) throw invalid_argument("DisorderMatrix: invalid pair index");
    DisorderMatrix copy = *this;
    copy.g_[flat_index(std::min(i, j), std::max(i, j))] = value;
    return copy;
  }

  // Dense symmetric copy with zero diagonal, for inner loops.
  std::vector<double> dense() const {
    std::vector<double> out(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        out[i * n_ + j] = out[j * n_ + i] = g_[flat_index(i, j)];
      }
    }
    return out;
  }

  std::size_t flat_index(std::size_t i, std::size_t j) const { return i * n_ - i * (i + 1) / 2 + (j - i - 1); }

 private:
  std::size_t n_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> g_;
};

// Flat record: n_sites, seed, row-major upper-triangular couplings.
inline nlohmann::json to_json(const DisorderMatrix& g) {
  return {{"n_sites", g.n_sites()}, {"seed", g.seed()}, {"couplings", std::vector<double>(g.couplings().begin(), g.couplings().end())}};
}

inline DisorderMatrix disorder_from_json(const nlohmann::json& j) {
  return DisorderMatrix(j.at("n_sites").get<std::size_t>(), j.at("couplings").get<std::vector<double>>(),
                        j.at("seed").get<std::uint64_t>());
}

// Entry (i, j) is the standard normal keyed by (seed, disorder stream, i, j),
// so the N x N disorder is the leading block of any larger one with the same seed.
inline DisorderMatrix sample_disorder(std::size_t n_sites, std::uint64_t seed) {
  if (n_sites < 2) throw invalid_argument("sample_disorder: n_sites must be at least 2");
  std::vector<double> g;
  g.reserve(n_sites * (n_sites - 1) / 2);
  for (std::size_t i = 0; i < n_sites; ++i) {
    for (std::size_t j = i + 1; j < n_sites; ++j) {
      g.push_back(keyed_normal(seed, stream_id::disorder, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)));
    }
  }
  return DisorderMatrix(n_sites, std::move(g), seed);
}

class SpinConfig {
 public:
  SpinConfig() = default;
  explicit SpinConfig(std::vector<int> spins) : spins_(std::move(spins)) {
    for (int s : spins_) {
      if (s != 1 && s != -1) throw invalid_argument("SpinConfig: entries must be -1 or +1");
    }
  }

  static SpinConfig from_index(std::size_t n_sites, std::uint64_t index) {
    std::vector<int> s(n_sites);
    for (std::size_t i = 0; i < n_sites; ++i) s[i] = ((index >> i) & 1u) ? 1 : -1;
    return SpinConfig(std::move(s));
  }

  static SpinConfig all_plus(std::size_t n_sites) { return SpinConfig(std::vector<int>(n_sites, 1)); }

  std::uint64_t index() const {
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < spins_.size(); ++i) {
      if (spins_[i] > 0) c |= std::uint64_t{1} << i;
    }
    return c;
  }

  std::size_t size() const { return spins_.size(); }
  int operator[](std::size_t i) const { return spins_[i]; }
  std::span<const int> spins() const { return spins_; }

  SpinConfig flipped(std::size_t i) const {
    SpinConfig c = *this;
    c.spins_.at(i) = -c.spins_[i];
    return c;
  }
  SpinConfig globally_flipped() const {
    SpinConfig c = *this;
    for (int& s : c.spins_) s = -s;
    return c;
  }

 private:
  std::vector<int> spins_;
};

// Fresh Gaussians g_1..g_N for the cavity field, on their own stream.
struct AuxiliaryGaussians {
  std::vector<double> values;
  std::uint64_t seed = 0;
};

inline AuxiliaryGaussians sample_auxiliary(std::size_t n_sites, std::uint64_t seed) {
  AuxiliaryGaussians aux{std::vector<double>(n_sites), seed};
  for (std::size_t i = 0; i < n_sites; ++i) {
    aux.values[i] = keyed_normal(seed, stream_id::auxiliary, static_cast<std::uint32_t>(i), 0u);
  }
  return aux;
}

inline void check_dims(const DisorderMatrix& g, const SpinConfig& s, const char* who) {
  if (g.n_sites() != s.size()) throw invalid_argument(std::string(who) + ": dimension mismatch");
}

// (beta / sqrt N) sum_{i<j} g_ij s_i s_j + h sum_i s_i
inline double energy_exponent(const ModelParams& params, const DisorderMatrix& g, const SpinConfig& s) {
  params.validate();
  check_dims(g, s, "energy_exponent");
  if (params.n_sites != g.n_sites()) throw invalid_argument("energy_exponent: params/disorder size mismatch");
  const std::size_t n = g.n_sites();
  double pair = 0.0;
  double field = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    field += s[i];
    for (std::size_t j = i + 1; j < n; ++j) pair += g(i, j) * s[i] * s[j];
  }
  return params.beta / std::sqrt(static_cast<double>(n)) * pair + params.h * field;
}

// l_i = (1 / sqrt N) sum_{j != i} g_ij s_j
inline double local_field(const DisorderMatrix& g, const SpinConfig& s, std::size_t i) {
  check_dims(g, s, "local_field");
  if (i >= g.n_sites()) throw invalid_argument("local_field: site index out of range");
  double acc = 0.0;
  for (std::size_t j = 0; j < g.n_sites(); ++j) {
    if (j != i) acc += g(i, j) * s[j];
  }
  return acc / std::sqrt(static_cast<double>(g.n_sites()));
}

// H = (1/N) sum_{i<j} g_ij s_i s_j - sqrt(N) beta / 2
inline double hamiltonian_h(const ModelParams& params, const DisorderMatrix& g, const SpinConfig& s) {
  check_dims(g, s, "hamiltonian_h");
  const std::size_t n = g.n_sites();
  double pair = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pair += g(i, j) * s[i] * s[j];
  }
  const double nn = static_cast<double>(n);
  return pair / nn - std::sqrt(nn) * params.beta / 2.0;
}

// l = (1 / sqrt N) sum_i g_i s_i
inline double cavity_field(const AuxiliaryGaussians& aux, const SpinConfig& s) {
  if (aux.values.size() != s.size()) throw invalid_argument("cavity_field: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += aux.values[i] * s[i];
  return acc / std::sqrt(static_cast<double>(s.size()));
}

// One configuration during enumeration. `fields[i]` is the unscaled
// sum_{j != i} g_ij s_j and `interaction` is sum_{i<j} g_ij s_i s_j.
struct ConfigurationView {
  std::uint64_t index;
  std::span<const int> spins;
  std::span<const double> fields;
  double interaction;
  int magnetization;
};

// Visits all 2^N configurations in Gray-code order, updating fields and
// interaction in O(N) per step. Exact recomputation every 4096 steps bounds
// the accumulated rounding.
template <class Visitor>
void visit_configurations(const DisorderMatrix& g, Visitor&& visit) {
  const std::size_t n = g.n_sites();
  if (n > max_enumeration_sites) throw capacity_exceeded("enumeration is capped at N = 24");
  const std::vector<double> dense = g.dense();
  std::vector<int> spins(n, -1);
  std::vector<double> fields(n, 0.0);
  double interaction = 0.0;
  int magnetization = -static_cast<int>(n);

  auto recompute = [&] {
    interaction = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double f = 0.0;
      const double* row = &dense[i * n];
      for (std::size_t j = 0; j < n; ++j) f += row[j] * spins[j];
      fields[i] = f;
      interaction += 0.5 * spins[i] * f;
    }
  };
  recompute();

  const std::uint64_t total = std::uint64_t{1} << n;
  std::uint64_t index = 0;
  for (std::uint64_t step = 0; step < total; ++step) {
    if (step > 0) {
      const auto site = static_cast<std::size_t>(std::countr_zero(step));
      const int old = spins[site];
      spins[site] = -old;
      index ^= std::uint64_t{1} << site;
      magnetization -= 2 * old;
      if ((step & 4095u) == 0) {
        recompute();
      } else {
        interaction -= 2.0 * old * fields[site];
        const double* row = &dense[site * n];
        const double delta = -2.0 * old;
        for (std::size_t i = 0; i < n; ++i) fields[i] += row[i] * delta;
      }
    }
    visit(ConfigurationView{index, spins, fields, interaction, magnetization});
  }
}

struct ExactGibbsTable {
  ModelParams params;
  std::vector<double> log_weights;
  double log_partition = 0.0;
  std::vector<double> probabilities;

  std::size_t n_sites() const { return params.n_sites; }
  std::size_t size() const { return probabilities.size(); }
};

inline ExactGibbsTable build_exact_gibbs(const ModelParams& params, const DisorderMatrix& g) {
  params.validate();
  if (params.n_sites != g.n_sites()) throw invalid_argument("build_exact_gibbs: params/disorder size mismatch");
  if (params.n_sites > max_enumeration_sites) throw capacity_exceeded("build_exact_gibbs: N exceeds 24");
  const std::size_t n = params.n_sites;
  const std::uint64_t total = std::uint64_t{1} << n;
  ExactGibbsTable table{params, std::vector<double>(total), 0.0, std::vector<double>(total)};
  const double coupling_scale = params.beta / std::sqrt(static_cast<double>(n));
  visit_configurations(g, [&](const ConfigurationView& c) {
    table.log_weights[c.index] = coupling_scale * c.interaction + params.h * c.magnetization;
  });
  const double peak = *std::max_element(table.log_weights.begin(), table.log_weights.end());
  compensated_sum mass;
  for (double lw : table.log_weights) mass.add(std::exp(lw - peak));
  table.log_partition = peak + std::log(mass.value());
  for (std::uint64_t c = 0; c < total; ++c) table.probabilities[c] = std::exp(table.log_weights[c] - table.log_partition);
  return table;
}

inline void check_site(const ExactGibbsTable& t, std::size_t i, const char* who) {
  if (i >= t.n_sites()) throw invalid_argument(std::string(who) + ": site index out of range");
}

// Exact <f(s^1, ..., s^k)> for k in {1, 2}. Larger k is served by replica
// sampling (overlap_moment_sampled4, or the Glauber sampler).
inline double quenched_average(const ExactGibbsTable& table, const std::function<double(std::span<const SpinConfig>)>& f,
                               std::size_t replicas) {
  const std::size_t n = table.n_sites();
  if (replicas == 0) throw invalid_argument("quenched_average: replicas must be positive");
  if (replicas > 2) {
    throw unsupported_operation("quenched_average: k > 2 is not enumerated; use replica sampling instead");
  }
  compensated_sum acc;
  if (replicas == 1) {
    for (std::uint64_t c = 0; c < table.size(); ++c) {
      const SpinConfig s = SpinConfig::from_index(n, c);
      acc.add(table.probabilities[c] * f(std::span<const SpinConfig>(&s, 1)));
    }
  } else {
    std::vector<SpinConfig> all(table.size());
    for (std::uint64_t c = 0; c < table.size(); ++c) all[c] = SpinConfig::from_index(n, c);
    std::array<SpinConfig, 2> pair;
    for (std::uint64_t c1 = 0; c1 < table.size(); ++c1) {
      pair[0] = all[c1];
      for (std::uint64_t c2 = 0; c2 < table.size(); ++c2) {
        pair[1] = all[c2];
        acc.add(table.probabilities[c1] * table.probabilities[c2] * f(pair));
      }
    }
  }
  return acc.value();
}

// <s_i> for every site.
inline std::vector<double> spin_marginals(const ExactGibbsTable& table) {
  const std::size_t n = table.n_sites();
  std::vector<compensated_sum> acc(n);
  for (std::uint64_t c = 0; c < table.size(); ++c) {
    const double p = table.probabilities[c];
    for (std::size_t i = 0; i < n; ++i) acc[i].add(((c >> i) & 1u) ? p : -p);
  }
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = acc[i].value();
  return m;
}

inline double spin_marginal(const ExactGibbsTable& table, std::size_t i) {
  check_site(table, i, "spin_marginal");
  compensated_sum acc;
  for (std::uint64_t c = 0; c < table.size(); ++c) {
    acc.add(((c >> i) & 1u) ? table.probabilities[c] : -table.probabilities[c]);
  }
  return acc.value();
}

inline double pair_correlation(const ExactGibbsTable& table, std::size_t i, std::size_t j) {
  check_site(table, i, "pair_correlation");
  check_site(table, j, "pair_correlation");
  if (i == j) return 1.0;
  compensated_sum acc;
  for (std::uint64_t c = 0; c < table.size(); ++c) {
    const bool same = ((c >> i) & 1u) == ((c >> j) & 1u);
    acc.add(same ? table.probabilities[c] : -table.probabilities[c]);
  }
  return acc.value();
}

// Row-major N x N matrix of <s_i s_j>.
inline std::vector<double> pair_correlations(const ExactGibbsTable& table) {
  const std::size_t n = table.n_sites();
  std::vector<double> out(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out[i * n + j] = out[j * n + i] = pair_correlation(table, i, j);
  }
  return out;
}

// r_i = (1 / sqrt N) sum_{j != i} g_ij <s_j> - beta (1 - q) <s_i>
inline double r_value_from_marginals(const DisorderMatrix& g, std::span<const double> m, double beta, double q,
                                     std::size_t i) {
  const std::size_t n = g.n_sites();
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) acc += g(i, j) * m[j];
  }
  return acc / std::sqrt(static_cast<double>(n)) - beta * (1.0 - q) * m[i];
}

inline double r_value(const ExactGibbsTable& table, const DisorderMatrix& g, double q, std::size_t i) {
  if (!(q >= 0.0 && q < 1.0)) throw invalid_argument("r_value: q must lie in [0, 1)");
  check_site(table, i, "r_value");
  if (g.n_sites() != table.n_sites()) throw invalid_argument("r_value: dimension mismatch");
  const std::vector<double> m = spin_marginals(table);
  return r_value_from_marginals(g, m, table.params.beta, q, i);
}

// nu_i = M(beta, h, r_i, 1 - q)
inline MixtureGaussianParams nu_params(const ModelParams& params, double r, double q) {
  if (!(q < 1.0)) throw invalid_argument("nu_params: q must be below 1");
  return {params.beta, params.h, r, 1.0 - q};
}

// <(R12 - q)^2> = (1/N^2) sum_ij <s_i s_j>^2 - 2q (1/N) sum_i <s_i>^2 + q^2
inline double overlap_moment_exact2(const ExactGibbsTable& table, double q) {
  const std::size_t n = table.n_sites();
  const std::vector<double> corr = pair_correlations(table);
  const std::vector<double> m = spin_marginals(table);
  compensated_sum second;
  for (double c : corr) second.add(c * c);
  compensated_sum first;
  for (double mi : m) first.add(mi * mi);
  const double nn = static_cast<double>(n);
  return second.value() / (nn * nn) - 2.0 * q * first.value() / nn + q * q;
}

// <(R12 - q)^k> exactly. The law of s^1 * s^2 (bitwise XOR of indices) is the
// XOR autocorrelation of the table, computed with a Walsh-Hadamard transform.
inline double overlap_moment_exact(const ExactGibbsTable& table, double q, int power) {
  if (power < 1) throw invalid_argument("overlap_moment_exact: power must be positive");
  const std::size_t n = table.n_sites();
  std::vector<double> w = table.probabilities;
  auto transform = [&w] {
    for (std::size_t len = 1; len < w.size(); len <<= 1) {
      for (std::size_t i = 0; i < w.size(); i += len << 1) {
        for (std::size_t j = i; j < i + len; ++j) {
          const double x = w[j];
          const double y = w[j + len];
          w[j] = x + y;
          w[j + len] = x - y;
        }
      }
    }
  };
  transform();
  for (double& x : w) x *= x;
  transform();
  // Bin by Hamming weight first so the power is taken N + 1 times.
  std::vector<compensated_sum> by_weight(n + 1);
  for (std::uint64_t x = 0; x < w.size(); ++x) by_weight[std::popcount(x)].add(w[x]);
  const double scale = 1.0 / static_cast<double>(w.size());
  const double nn = static_cast<double>(n);
  compensated_sum acc;
  for (std::size_t k = 0; k <= n; ++k) {
    const double d = (nn - 2.0 * static_cast<double>(k)) / nn - q;
    acc.add(by_weight[k].value() * scale * std::pow(d, power));
  }
  return acc.value();
}

struct SampledMoment {
  double estimate = 0.0;
  double std_error = 0.0;
};

// <(R12 - q)^4> from independent replica pairs drawn from the exact table.
inline SampledMoment overlap_moment_sampled4(const ExactGibbsTable& table, double q, std::size_t samples,
                                             std::uint64_t seed) {
  if (samples < 100) throw invalid_argument("overlap_moment_sampled4: at least 100 samples required");
  const std::size_t n = table.n_sites();
  const AliasTable alias(table.probabilities);
  counter_stream rng(seed, stream_id::replica);
  running_stats acc;
  const double nn = static_cast<double>(n);
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  for (std::size_t k = 0; k < samples; ++k) {
    const std::uint64_t c1 = alias.sample(rng);
    const std::uint64_t c2 = alias.sample(rng);
    // s_i^1 s_i^2 = +1 where the bits agree.
    const int agree = static_cast<int>(n) - std::popcount((c1 ^ c2) & mask);
    const double overlap = (2.0 * agree - nn) / nn;
    const double d = overlap - q;
    acc.add(d * d * d * d);
  }
  return {acc.mean(), acc.stderr_of_mean()};
}

// |<s_i> - <tanh(beta l_i + h)>|, both sides by enumeration.
inline double callen_identity_residual(const ExactGibbsTable& table, const DisorderMatrix& g, std::size_t i) {
  check_site(table, i, "callen_identity_residual");
  if (g.n_sites() != table.n_sites()) throw invalid_argument("callen_identity_residual: dimension mismatch");
  const double scale = table.params.beta / std::sqrt(static_cast<double>(g.n_sites()));
  compensated_sum spin;
  compensated_sum conditional;
  visit_configurations(g, [&](const ConfigurationView& c) {
    const double p = table.probabilities[c.index];
    spin.add(p * c.spins[i]);
    conditional.add(p * std::tanh(scale * c.fields[i] + table.params.h));
  });
  return std::abs(spin.value() - conditional.value());
}

}  // namespace skstein
