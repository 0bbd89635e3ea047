#pragma once

// The second-moment identity applied to the SK quenched fields
//   h_j(g) = N^{-1/2} < (s_j - <s_j>) f(l_1, r_1) >,   j = 2..N,
// as functions of the first row of couplings g_{1j}, with every other coupling
// held fixed. Here f(l, r) = u(l - r). Derivatives dh_j/dg_{1k} are central
// differences on rebuilt Gibbs tables.

#include <cmath>
#include <cstdint>
#include <vector>

#include "skstein/errors.hpp"
#include "skstein/gaussian_tools.hpp"
#include "skstein/rng.hpp"
#include "skstein/sk_model.hpp"
#include "skstein/test_functions.hpp"

namespace skstein {

inline constexpr std::size_t max_lemma_sites = 14;

namespace detail {

inline std::vector<double> quenched_row_fields(const ModelParams& params, const DisorderMatrix& g, double q,
                                               const TestFunction& u) {
  const std::size_t n = g.n_sites();
  const ExactGibbsTable table = build_exact_gibbs(params, g);
  const std::vector<double> m = spin_marginals(table);
  const double r1 = r_value_from_marginals(g, m, params.beta, q, 0);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<compensated_sum> acc(n - 1);
  visit_configurations(g, [&](const ConfigurationView& c) {
    const double p = table.probabilities[c.index];
    const double f = u(c.fields[0] * inv_sqrt_n - r1);
    for (std::size_t j = 1; j < n; ++j) acc[j - 1].add(p * (c.spins[j] - m[j]) * f);
  });
  std::vector<double> h(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) h[j] = acc[j].value() * inv_sqrt_n;
  return h;
}

}  // namespace detail

inline LemmaSides approximation_lemma_sk(const ModelParams& params, const DisorderMatrix& disorder, double q,
                                         const TestFunction& u, std::size_t replications, std::uint64_t seed,
                                         double step = 1e-4) {
  params.validate();
  const std::size_t n = params.n_sites;
  if (n != disorder.n_sites()) throw invalid_argument("approximation_lemma_sk: params/disorder size mismatch");
  if (n > max_lemma_sites) throw capacity_exceeded("approximation_lemma_sk: N is capped at 14");
  if (!(q >= 0.0 && q < 1.0)) throw invalid_argument("approximation_lemma_sk: q must lie in [0, 1)");
  if (!u.smooth()) throw invalid_argument("approximation_lemma_sk: u must be smooth for finite differences");
  if (replications < 2) throw invalid_argument("approximation_lemma_sk: at least two replications required");

  const std::size_t dim = n - 1;
  std::vector<LemmaSample> draws(replications);
  std::vector<double> row(dim);
  std::vector<double> jac(dim * dim);
  for (std::size_t rep = 0; rep < replications; ++rep) {
    DisorderMatrix g = disorder;
    for (std::size_t k = 0; k < dim; ++k) {
      row[k] = keyed_normal(seed, stream_id::lemma, static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(k + 1));
      g = g.with_coupling(0, k + 1, row[k]);
    }
    const std::vector<double> h = detail::quenched_row_fields(params, g, q, u);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto up = detail::quenched_row_fields(params, g.with_coupling(0, k + 1, row[k] + step), q, u);
      const auto down = detail::quenched_row_fields(params, g.with_coupling(0, k + 1, row[k] - step), q, u);
      for (std::size_t j = 0; j < dim; ++j) jac[j * dim + k] = (up[j] - down[j]) / (2.0 * step);
    }
    draws[rep] = lemma_terms(row, h, jac);
    if (!std::isfinite(draws[rep].lhs) || !std::isfinite(draws[rep].rhs)) {
      throw numeric_failure("approximation_lemma_sk: non-finite field or derivative");
    }
  }
  return summarize_lemma(draws);
}

}  // namespace skstein
