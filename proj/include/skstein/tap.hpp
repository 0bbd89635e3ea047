#pragma once

// Overlap self-consistency q = E tanh^2(beta z sqrt(q) + h) and the TAP system
//   m_i = tanh( (beta / sqrt N) sum_{j != i} g_ij m_j + h - beta^2 (1 - q) m_i ).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "skstein/errors.hpp"
#include "skstein/quadrature.hpp"
#include "skstein/sk_model.hpp"

namespace skstein {

struct QSolution {
  double q = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
};

// E tanh^2(beta z sqrt(q) + h), Gauss-Hermite order 64.
inline double q_map(double beta, double h, double q) {
  const double scale = beta * std::sqrt(std::max(q, 0.0));
  return gaussian_expectation(
      [&](double z) {
        const double t = std::tanh(scale * z + h);
        return t * t;
      },
      gauss_hermite_64());
}

inline QSolution q_fixed_point(double beta, double h, double tol = 1e-13) {
  if (!(tol >= 1e-14)) throw invalid_argument("q_fixed_point: tol must be at least 1e-14");
  if (!(beta >= 0.0) || !std::isfinite(beta) || !std::isfinite(h)) {
    throw invalid_argument("q_fixed_point: beta must be finite and >= 0, h finite");
  }
  if (h == 0.0) {
    if (beta <= 1.0) return {0.0, 0, 0.0};
    throw ambiguous_root("q_fixed_point: h = 0 with beta > 1 has several fixed points");
  }
  constexpr double damping = 0.5;
  constexpr std::size_t max_iterations = 10000;
  const double th = std::tanh(h);
  double q = th * th;
  std::vector<double> trajectory{q};
  for (std::size_t it = 0; it <= max_iterations; ++it) {
    const double mapped = q_map(beta, h, q);
    const double residual = std::abs(q - mapped);
    if (residual <= tol) return {q, it, residual};
    if (it == max_iterations) break;
    q = (1.0 - damping) * q + damping * mapped;
    trajectory.push_back(q);
  }
  throw convergence_failure("q_fixed_point: no convergence within 10^4 iterations", std::move(trajectory));
}

struct TapSolution {
  std::vector<double> m;
  std::size_t iterations = 0;
  double residual_sup = 0.0;
  bool converged = false;
};

// RHS_i(m) of the TAP system.
inline std::vector<double> tap_map(const DisorderMatrix& g, const ModelParams& params, double q,
                                   const std::vector<double>& m) {
  const std::size_t n = g.n_sites();
  const double scale = params.beta / std::sqrt(static_cast<double>(n));
  const double onsager = params.beta * params.beta * (1.0 - q);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) acc += g(i, j) * m[j];
    }
    out[i] = std::tanh(scale * acc + params.h - onsager * m[i]);
  }
  return out;
}

inline double tap_substitution_residual(const DisorderMatrix& g, const ModelParams& params, double q,
                                        const std::vector<double>& m) {
  const std::vector<double> rhs = tap_map(g, params, q, m);
  double worst = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) worst = std::max(worst, std::abs(m[i] - rhs[i]));
  return worst;
}

// Damped synchronous iteration from m_i = tanh(h). Running out of iterations
// is reported through `converged`, not thrown.
inline TapSolution tap_iterate(const DisorderMatrix& g, const ModelParams& params, double q, double damping = 0.5,
                               double tol = 1e-12, std::size_t max_iter = 10000) {
  params.validate();
  if (params.n_sites != g.n_sites()) throw invalid_argument("tap_iterate: params/disorder size mismatch");
  if (!(q >= 0.0 && q < 1.0)) throw invalid_argument("tap_iterate: q must lie in [0, 1)");
  if (!(damping > 0.0 && damping <= 1.0)) throw invalid_argument("tap_iterate: damping must lie in (0, 1]");
  if (!(tol > 0.0) || max_iter == 0) throw invalid_argument("tap_iterate: tol and max_iter must be positive");
  const std::size_t n = g.n_sites();
  TapSolution sol;
  sol.m.assign(n, std::tanh(params.h));
  for (std::size_t it = 0;; ++it) {
    const std::vector<double> rhs = tap_map(g, params, q, sol.m);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(sol.m[i] - rhs[i]));
    sol.residual_sup = worst;
    sol.iterations = it;
    if (worst <= tol) {
      sol.converged = true;
      break;
    }
    if (it == max_iter) break;
    for (std::size_t i = 0; i < n; ++i) sol.m[i] = (1.0 - damping) * sol.m[i] + damping * rhs[i];
  }
  for (double& mi : sol.m) mi = std::clamp(mi, std::nextafter(-1.0, 0.0), std::nextafter(1.0, 0.0));
  return sol;
}

// (1/N) sum_i (m_i - <s_i>)^2
inline double tap_vs_exact(const TapSolution& solution, const ExactGibbsTable& table) {
  if (solution.m.size() != table.n_sites()) throw invalid_argument("tap_vs_exact: dimension mismatch");
  const std::vector<double> exact = spin_marginals(table);
  double acc = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double d = solution.m[i] - exact[i];
    acc += d * d;
  }
  return acc / static_cast<double>(exact.size());
}

// <s_i> - tanh(beta r_i + h) with the exact marginals, for every site. The
// argument beta r_i + h is exactly the TAP right-hand side at m = <s>.
inline std::vector<double> tap_residual_exact(const ExactGibbsTable& table, const DisorderMatrix& g, double q) {
  if (!(q >= 0.0 && q < 1.0)) throw invalid_argument("tap_residual_exact: q must lie in [0, 1)");
  if (g.n_sites() != table.n_sites()) throw invalid_argument("tap_residual_exact: dimension mismatch");
  const std::vector<double> m = spin_marginals(table);
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double r = r_value_from_marginals(g, m, table.params.beta, q, i);
    out[i] = m[i] - std::tanh(table.params.beta * r + table.params.h);
  }
  return out;
}

}  // namespace skstein
