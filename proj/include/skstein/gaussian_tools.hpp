#pragma once

// Gaussian integration by parts and the second-moment identity
//   E( sum_j g_j h_j - sum_j dh_j/dg_j )^2
//     = sum_j E h_j^2 + sum_{j,k} E( dh_j/dg_k * dh_k/dg_j )
// for independent standard Gaussians g and smooth h_j(g).

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "skstein/errors.hpp"
#include "skstein/rng.hpp"
#include "skstein/stats.hpp"

namespace skstein {

struct ResidualEstimate {
  double residual = 0.0;
  double std_error = 0.0;
};

// |E(g f(g)) - E f'(g)| from one set of draws; the error is that of the
// paired difference.
template <class F, class FPrime>
ResidualEstimate ibp_residual(F&& f, FPrime&& fprime, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw invalid_argument("ibp_residual: at least two samples required");
  counter_stream rng(seed, stream_id::gaussian);
  running_stats diff;
  for (std::size_t k = 0; k < samples; ++k) {
    const double g = rng.normal();
    diff.add(g * f(g) - fprime(g));
  }
  return {std::abs(diff.mean()), diff.stderr_of_mean()};
}

struct SmoothFieldFamily {
  std::size_t dimension = 0;
  std::function<double(std::span<const double>, std::size_t)> evaluate;
  std::function<double(std::span<const double>, std::size_t, std::size_t)> gradient;  // dh_j / dg_k
};

// h_j = c_j
inline SmoothFieldFamily constant_family(std::vector<double> c) {
  const std::size_t n = c.size();
  return {n, [c](std::span<const double>, std::size_t j) { return c[j]; },
          [](std::span<const double>, std::size_t, std::size_t) { return 0.0; }};
}

// h_j = g_j
inline SmoothFieldFamily identity_family(std::size_t n) {
  return {n, [](std::span<const double> g, std::size_t j) { return g[j]; },
          [](std::span<const double>, std::size_t j, std::size_t k) { return j == k ? 1.0 : 0.0; }};
}

// h_j = g_{(j+1) mod n}
inline SmoothFieldFamily shift_family(std::size_t n) {
  return {n, [n](std::span<const double> g, std::size_t j) { return g[(j + 1) % n]; },
          [n](std::span<const double>, std::size_t j, std::size_t k) { return k == (j + 1) % n ? 1.0 : 0.0; }};
}

// Largest |analytic - central difference| over `points` random Gaussian points.
inline double gradient_consistency(const SmoothFieldFamily& family, std::size_t points, std::uint64_t seed,
                                   double step = 1e-5) {
  counter_stream rng(seed, stream_id::gaussian, 1);
  std::vector<double> g(family.dimension);
  double worst = 0.0;
  for (std::size_t p = 0; p < points; ++p) {
    for (double& x : g) x = rng.normal();
    for (std::size_t j = 0; j < family.dimension; ++j) {
      for (std::size_t k = 0; k < family.dimension; ++k) {
        std::vector<double> up = g;
        std::vector<double> down = g;
        up[k] += step;
        down[k] -= step;
        const double fd = (family.evaluate(up, j) - family.evaluate(down, j)) / (2.0 * step);
        worst = std::max(worst, std::abs(fd - family.gradient(g, j, k)));
      }
    }
  }
  return worst;
}

struct LemmaSides {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs_std_error = 0.0;
  // Standard error of lhs - rhs from the paired per-draw differences.
  double diff_std_error = 0.0;
  std::size_t samples = 0;

  bool agree(double k = 4.0) const { return std::abs(lhs - rhs) <= k * diff_std_error; }
};

struct LemmaSample {
  double lhs = 0.0;
  double rhs = 0.0;
};

// Per-draw terms of the identity from values h_j and the Jacobian
// jac[j * n + k] = dh_j / dg_k.
inline LemmaSample lemma_terms(std::span<const double> g, std::span<const double> h, std::span<const double> jac) {
  const std::size_t n = g.size();
  double inner = 0.0;
  double rhs = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    inner += g[j] * h[j] - jac[j * n + j];
    rhs += h[j] * h[j];
    for (std::size_t k = 0; k < n; ++k) rhs += jac[j * n + k] * jac[k * n + j];
  }
  return {inner * inner, rhs};
}

inline LemmaSides summarize_lemma(std::span<const LemmaSample> draws) {
  running_stats lhs;
  running_stats rhs;
  running_stats diff;
  for (const auto& d : draws) {
    lhs.add(d.lhs);
    rhs.add(d.rhs);
    diff.add(d.lhs - d.rhs);
  }
  return {lhs.mean(), rhs.mean(), lhs.stderr_of_mean(), rhs.stderr_of_mean(), diff.stderr_of_mean(), draws.size()};
}

// Both sides on the same Gaussian draws (common random numbers).
inline LemmaSides approximation_lemma_sides(const SmoothFieldFamily& family, std::size_t samples, std::uint64_t seed) {
  if (samples < 1000) throw invalid_argument("approximation_lemma_sides: at least 1000 samples required");
  const std::size_t n = family.dimension;
  if (n == 0) throw invalid_argument("approximation_lemma_sides: empty family");
  counter_stream rng(seed, stream_id::gaussian, 2);
  std::vector<double> g(n);
  std::vector<double> h(n);
  std::vector<double> jac(n * n);
  std::vector<LemmaSample> draws(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    for (double& x : g) x = rng.normal();
    for (std::size_t j = 0; j < n; ++j) {
      h[j] = family.evaluate(g, j);
      for (std::size_t k = 0; k < n; ++k) jac[j * n + k] = family.gradient(g, j, k);
    }
    draws[s] = lemma_terms(g, h, jac);
    if (!std::isfinite(draws[s].lhs) || !std::isfinite(draws[s].rhs)) {
      throw numeric_failure("approximation_lemma_sides: non-finite value or gradient");
    }
  }
  return summarize_lemma(draws);
}

}  // namespace skstein
