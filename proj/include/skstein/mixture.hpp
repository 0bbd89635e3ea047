#pragma once

// The two-component Gaussian mixture family M(a, b, mu, sigma^2) with density
// proportional to cosh(a x + b) exp(-(x - mu)^2 / (2 sigma^2)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "skstein/errors.hpp"
#include "skstein/quadrature.hpp"
#include "skstein/rng.hpp"
#include "skstein/test_functions.hpp"

namespace skstein {

struct MixtureGaussianParams {
  double a = 0.0;
  double b = 0.0;
  double mu = 0.0;
  double sigma2 = 1.0;

  void validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw invalid_argument("mixture: sigma2 must be positive");
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(mu)) {
      throw invalid_argument("mixture: parameters must be finite");
    }
  }
  double sigma() const { return std::sqrt(sigma2); }
};

struct MixtureDecomposition {
  double p = 0.5;
  double mean_plus = 0.0;
  double mean_minus = 0.0;
  double sigma2 = 1.0;
};

// log cosh without overflow.
inline double log_cosh(double y) {
  const double ay = std::abs(y);
  return ay + std::log1p(std::exp(-2.0 * ay)) - std::numbers::ln2;
}

inline double log_normalizer(const MixtureGaussianParams& params) {
  return 0.5 * std::log(2.0 * std::numbers::pi * params.sigma2) + log_cosh(params.a * params.mu + params.b) +
         0.5 * params.a * params.a * params.sigma2;
}

inline double density(const MixtureGaussianParams& params, double x) {
  params.validate();
  const double d = x - params.mu;
  return std::exp(log_cosh(params.a * x + params.b) - d * d / (2.0 * params.sigma2) - log_normalizer(params));
}

inline double gaussian_density(double mean, double variance, double x) {
  const double d = x - mean;
  return std::exp(-d * d / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

// p = e^{y} / (e^{y} + e^{-y}) with y = a mu + b.
inline MixtureDecomposition decompose(const MixtureGaussianParams& params) {
  params.validate();
  const double y = params.a * params.mu + params.b;
  const double shift = params.a * params.sigma2;
  return {1.0 / (1.0 + std::exp(-2.0 * y)), params.mu + shift, params.mu - shift, params.sigma2};
}

// Inverse map: p N(mu1, s2) + (1-p) N(mu2, s2) as a member of M.
inline MixtureGaussianParams from_two_component(double p, double mu1, double mu2, double sigma2) {
  if (!(p > 0.0 && p < 1.0)) throw invalid_argument("from_two_component: p must lie in (0,1)");
  if (!(sigma2 > 0.0)) throw invalid_argument("from_two_component: sigma2 must be positive");
  const double a = (mu1 - mu2) / (2.0 * sigma2);
  const double b = 0.5 * std::log(p / (1.0 - p)) - (mu1 * mu1 - mu2 * mu2) / (4.0 * sigma2);
  return {a, b, 0.5 * (mu1 + mu2), sigma2};
}

inline double mean(const MixtureGaussianParams& params) {
  params.validate();
  return params.mu + std::tanh(params.a * params.mu + params.b) * params.a * params.sigma2;
}

// Closed form of E tanh(aX + b) under M(a, b, mu, sigma^2).
inline double tanh_moment(const MixtureGaussianParams& params) {
  params.validate();
  return std::tanh(params.a * params.mu + params.b);
}

// Interval that holds both components out to `width` standard deviations.
inline std::pair<double, double> support_window(const MixtureGaussianParams& params, double width = 12.0) {
  const double s = params.sigma();
  const double shift = std::abs(params.a) * params.sigma2;
  return {params.mu - shift - width * s, params.mu + shift + width * s};
}

// E fn(X) by adaptive Gauss-Kronrod against the density itself, splitting at
// the given breakpoints. Tail mass beyond 12 sigma is below 1e-30.
template <class Fn>
double expectation_adaptive(const MixtureGaussianParams& params, Fn&& fn, std::span<const double> breakpoints = {},
                            double rel_tol = 1e-13) {
  params.validate();
  const auto [lo, hi] = support_window(params);
  const double log_z = log_normalizer(params);
  auto integrand = [&](double x) {
    const double d = x - params.mu;
    return fn(x) * std::exp(log_cosh(params.a * x + params.b) - d * d / (2.0 * params.sigma2) - log_z);
  };
  return integrate_adaptive(integrand, lo, hi, breakpoints, rel_tol).value;
}

// E fn(X) as p E fn(X+) + (1-p) E fn(X-), Gauss-Hermite of order 64 per
// component. Intended for smooth integrands.
template <class Fn>
double expectation_hermite(const MixtureGaussianParams& params, Fn&& fn) {
  const MixtureDecomposition dec = decompose(params);
  const double s = params.sigma();
  const auto& rule = gauss_hermite_64();
  double plus = 0.0;
  double minus = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double z = s * rule.nodes[i];
    plus += rule.weights[i] * fn(dec.mean_plus + z);
    minus += rule.weights[i] * fn(dec.mean_minus + z);
  }
  const double value = dec.p * plus + (1.0 - dec.p) * minus;
  if (!std::isfinite(value)) throw numeric_failure("mixture expectation is not finite");
  return value;
}

// Integral of u against M: Gauss-Hermite for smooth u, discontinuity-aware
// adaptive quadrature otherwise.
inline double expectation(const MixtureGaussianParams& params, const TestFunction& u) {
  if (u.smooth()) return expectation_hermite(params, u.value);
  const double value = expectation_adaptive(params, u.value, u.discontinuities);
  if (!std::isfinite(value)) throw numeric_failure("mixture expectation is not finite");
  return value;
}

struct OnsagerCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

// E tanh(aX + b) for X ~ p N(mu1, s2) + (1-p) N(mu2, s2), with (a, b) chosen
// from the mixture; lhs by quadrature over the two components, rhs the closed
// form tanh(a E X + b - (2p-1) a^2 s2).
inline OnsagerCheck onsager_identity_check(double p, double mu1, double mu2, double sigma2) {
  if (!(mu1 > mu2)) throw invalid_argument("onsager_identity_check: requires mu1 > mu2");
  if (!(p > 0.0 && p < 1.0)) throw invalid_argument("onsager_identity_check: p must lie in (0,1)");
  if (!(sigma2 > 0.0)) throw invalid_argument("onsager_identity_check: sigma2 must be positive");
  const double a = (mu1 - mu2) / (2.0 * sigma2);
  const double b = 0.5 * std::log(p / (1.0 - p)) - (mu1 * mu1 - mu2 * mu2) / (4.0 * sigma2);
  const double s = std::sqrt(sigma2);
  auto component = [&](double m) {
    auto f = [&](double x) { return std::tanh(a * x + b) * gaussian_density(m, sigma2, x); };
    return integrate_adaptive(f, m - 14.0 * s, m + 14.0 * s).value;
  };
  const double lhs = p * component(mu1) + (1.0 - p) * component(mu2);
  const double ex = p * mu1 + (1.0 - p) * mu2;
  const double rhs = std::tanh(a * ex + b - (2.0 * p - 1.0) * a * a * sigma2);
  return {lhs, rhs};
}

// Bernoulli(p) component choice then a Gaussian draw; draw k uses counter
// block k of the mixture stream, so prefixes agree across counts.
inline std::vector<double> sample(const MixtureGaussianParams& params, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw invalid_argument("sample: count must be positive");
  const MixtureDecomposition dec = decompose(params);
  const double s = params.sigma();
  const philox_key key = key_from_seed(seed);
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const philox_block ctr{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                           static_cast<std::uint32_t>(stream_id::mixture), 0u};
    const philox_block coin_block = philox4x32(ctr, key);
    const philox_block normal_block = philox4x32({ctr[0], ctr[1], ctr[2], 1u}, key);
    const bool plus = open_uniform(coin_block[0], coin_block[1]) < dec.p;
    out[k] = (plus ? dec.mean_plus : dec.mean_minus) + s * normal_pair(normal_block)[0];
  }
  return out;
}

}  // namespace skstein
