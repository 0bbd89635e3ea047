#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "skstein/errors.hpp"

namespace skstein {

// Gauss-Hermite rule for the standard normal weight (probabilist convention):
// sum_i weights[i] * f(nodes[i]) ~= E f(Z), Z ~ N(0,1).
struct GaussHermiteRule {
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Orthonormal probabilist Hermite polynomials p_0..p_n at x. Returns
// (p_{n-1}(x), p_n(x)) and accumulates sum_{k<n} p_k(x)^2 in `christoffel`.
inline std::pair<double, double> orthonormal_hermite(int n, double x, double& christoffel) {
  double prev = 0.0;
  double cur = 1.0;
  christoffel = 0.0;
  for (int k = 0; k < n; ++k) {
    christoffel += cur * cur;
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return {prev, cur};
}

inline GaussHermiteRule compute_gauss_hermite(int order) {
  GaussHermiteRule rule;
  rule.order = order;
  // Golub-Welsch for the initial nodes.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
  std::vector<double> nodes(solver.eigenvalues().data(), solver.eigenvalues().data() + order);
  std::sort(nodes.begin(), nodes.end());

  // Newton polish on the orthonormal recurrence: p_n'(x) = sqrt(n) p_{n-1}(x).
  std::vector<double> weights(order);
  const double sqrt_n = std::sqrt(static_cast<double>(order));
  for (int i = 0; i < order; ++i) {
    double x = nodes[i];
    double christoffel = 0.0;
    for (int it = 0; it < 3; ++it) {
      const auto [pm1, pn] = orthonormal_hermite(order, x, christoffel);
      const double deriv = sqrt_n * pm1;
      if (deriv == 0.0) break;
      x -= pn / deriv;
    }
    orthonormal_hermite(order, x, christoffel);
    nodes[i] = x;
    weights[i] = 1.0 / christoffel;
  }
  // Enforce the exact symmetry of the rule.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (nodes[j] - nodes[i]);
    const double w = 0.5 * (weights[i] + weights[j]);
    nodes[i] = -x;
    nodes[j] = x;
    weights[i] = weights[j] = w;
  }
  if (order % 2 == 1) nodes[order / 2] = 0.0;
  // Weights are exact up to rounding; renormalize the residual drift.
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  rule.nodes = std::move(nodes);
  rule.weights = std::move(weights);
  return rule;
}

}  // namespace detail

inline GaussHermiteRule gauss_hermite(int order) {
  if (order < 1 || order > 256) throw invalid_argument("gauss_hermite: order must be in [1, 256]");
  static std::mutex mutex;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, detail::compute_gauss_hermite(order)).first;
  return it->second;
}

// The order-64 rule used for every smooth Gaussian expectation in the project.
inline const GaussHermiteRule& gauss_hermite_64() {
  static const GaussHermiteRule rule = gauss_hermite(64);
  return rule;
}

template <class Fn>
double gaussian_expectation(Fn&& fn, const GaussHermiteRule& rule) {
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = fn(rule.nodes[i]);
    if (!std::isfinite(v)) throw numeric_failure("gaussian_expectation: non-finite integrand at a node");
    total += rule.weights[i] * v;
  }
  return total;
}

struct integration_result {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod (7/15) on [lo, hi], split at every breakpoint inside
// the interval so that jump discontinuities sit on panel boundaries.
template <class Fn>
integration_result integrate_adaptive(Fn&& fn, double lo, double hi, std::span<const double> breakpoints = {},
                                      double rel_tol = 1e-13) {
  using boost::math::quadrature::gauss_kronrod;
  if (!(lo < hi)) return {};
  std::vector<double> cuts{lo};
  for (double b : breakpoints) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  integration_result total;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (!(cuts[k] < cuts[k + 1])) continue;
    double err = 0.0;
    const double v = gauss_kronrod<double, 15>::integrate(fn, cuts[k], cuts[k + 1], 20, rel_tol, &err);
    if (!std::isfinite(v)) throw numeric_failure("integrate_adaptive: non-finite result");
    total.value += v;
    total.error += err;
  }
  return total;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace skstein
