#pragma once

// Stein's method for the mixture family M(a, b, mu, sigma^2).
//
// Characterizing operator:
//   Tf(x) = f'(x) - ((x - mu) / sigma^2 - a tanh(a x + b)) f(x)
// and the solution of Tf = u - r(mu), r(mu) = E u(X), X ~ M(a, b, mu, sigma^2):
//   f(x, mu) =  rho(x)^{-1} int_{-inf}^x rho(t) (u(t) - r) dt      (x <  mu)
//            = -rho(x)^{-1} int_x^{inf}  rho(t) (u(t) - r) dt      (x >= mu)
// with rho(x, mu) = cosh(a x + b) exp(-(x - mu)^2 / (2 sigma^2)).

#include <algorithm>
#include <cmath>
#include <iostream>
#include <span>
#include <vector>

#include "skstein/errors.hpp"
#include "skstein/mixture.hpp"
#include "skstein/quadrature.hpp"
#include "skstein/test_functions.hpp"

namespace skstein {

inline double stein_drift(const MixtureGaussianParams& params, double x) {
  return (x - params.mu) / params.sigma2 - params.a * std::tanh(params.a * x + params.b);
}

template <class F, class FPrime>
double stein_apply(const MixtureGaussianParams& params, F&& f, FPrime&& fprime, double x) {
  return fprime(x) - stein_drift(params, x) * f(x);
}

struct SteinValue {
  double f = 0.0;
  double f_x = 0.0;
  double f_mu = 0.0;
};

struct SteinBounds {
  double sup_f = 0.0;
  double sup_f_x = 0.0;
  double sup_f_mu = 0.0;
  double u_sup_norm = 0.0;
};

class SteinSolution {
 public:
  SteinSolution(MixtureGaussianParams params, TestFunction u) : params_(params), u_(std::move(u)) {
    params_.validate();
    const Centering c = centering(params_.mu);
    r_ = c.r;
    r_prime_ = c.r_prime;
    check_sup_norm();
  }

  const MixtureGaussianParams& params() const { return params_; }
  const TestFunction& test_function() const { return u_; }
  double r() const { return r_; }
  double r_prime() const { return r_prime_; }
  double u_sup_norm() const { return u_.sup_norm; }

  // f and f_x at (x, mu0). f_x comes from the Stein equation itself.
  SteinValue value(double x) const {
    const double f = solve_at(x, params_.mu, r_);
    return {f, stein_drift(params_, x) * f + u_(x) - r_, 0.0};
  }

  // f, f_x, f_mu at (x, mu0).
  SteinValue evaluate(double x) const { return evaluate(x, params_.mu); }

  SteinValue evaluate(double x, double mu) const {
    const bool base = mu == params_.mu;
    const Centering c = base ? Centering{r_, r_prime_} : centering(mu);
    MixtureGaussianParams at = params_;
    at.mu = mu;
    const double s = params_.sigma();
    const double spread = std::abs(params_.a) * params_.sigma2;
    const double log_rho_x = log_rho(x, mu);
    auto weight = [&](double t) { return std::exp(log_rho(t, mu) - log_rho_x); };

    double f = 0.0;
    double moment = 0.0;  // rho^{-1} int (t - mu)/sigma^2 rho (u - r) over the side
    double mass = 0.0;    // rho^{-1} int rho over the side
    if (x < mu) {
      const double lo = std::min(x, mu - spread) - 14.0 * s;
      f = integrate_adaptive([&](double t) { return weight(t) * (u_(t) - c.r); }, lo, x, u_.discontinuities).value;
      moment = integrate_adaptive([&](double t) { return weight(t) * (t - mu) / params_.sigma2 * (u_(t) - c.r); }, lo,
                                  x, u_.discontinuities)
                   .value;
      mass = integrate_adaptive(weight, lo, x).value;
      const double f_mu = -(x - mu) / params_.sigma2 * f + moment - c.r_prime * mass;
      return {f, stein_drift(at, x) * f + u_(x) - c.r, f_mu};
    }
    const double hi = std::max(x, mu + spread) + 14.0 * s;
    f = -integrate_adaptive([&](double t) { return weight(t) * (u_(t) - c.r); }, x, hi, u_.discontinuities).value;
    moment = integrate_adaptive([&](double t) { return weight(t) * (t - mu) / params_.sigma2 * (u_(t) - c.r); }, x, hi,
                                u_.discontinuities)
                 .value;
    mass = integrate_adaptive(weight, x, hi).value;
    const double f_mu = -(x - mu) / params_.sigma2 * f - moment + c.r_prime * mass;
    return {f, stein_drift(at, x) * f + u_(x) - c.r, f_mu};
  }

  // Observed suprema on a grid. The uniform constant of the existence bound is
  // not computable; this is what gets logged in its place.
  SteinBounds observed_bounds(std::span<const double> grid) const {
    SteinBounds b;
    b.u_sup_norm = u_.sup_norm;
    for (double x : grid) {
      const SteinValue v = evaluate(x);
      b.sup_f = std::max(b.sup_f, std::abs(v.f));
      b.sup_f_x = std::max(b.sup_f_x, std::abs(v.f_x));
      b.sup_f_mu = std::max(b.sup_f_mu, std::abs(v.f_mu));
    }
    if (!std::isfinite(b.sup_f) || !std::isfinite(b.sup_f_x) || !std::isfinite(b.sup_f_mu)) {
      throw numeric_failure("SteinSolution: non-finite solution on the grid");
    }
    return b;
  }

 private:
  struct Centering {
    double r;
    double r_prime;
  };

  double log_rho(double t, double mu) const {
    const double d = t - mu;
    return log_cosh(params_.a * t + params_.b) - d * d / (2.0 * params_.sigma2);
  }

  // r(mu) = E u(X) and r'(mu) = E[(u(X) - r)(X - mu)] / sigma^2.
  Centering centering(double mu) const {
    MixtureGaussianParams at = params_;
    at.mu = mu;
    double r = 0.0;
    try {
      r = expectation(at, u_);
    } catch (const numeric_failure&) {
      throw invalid_argument("solve_stein: r(mu) overflowed; u must be bounded");
    }
    if (!std::isfinite(r)) throw invalid_argument("solve_stein: r(mu) overflowed; u must be bounded");
    auto cov = [&](double t) { return (u_(t) - r) * (t - mu); };
    const double c = u_.smooth() ? expectation_hermite(at, cov) : expectation_adaptive(at, cov, u_.discontinuities);
    return {r, c / params_.sigma2};
  }

  double solve_at(double x, double mu, double r) const {
    const double s = params_.sigma();
    const double spread = std::abs(params_.a) * params_.sigma2;
    const double log_rho_x = log_rho(x, mu);
    auto integrand = [&](double t) { return std::exp(log_rho(t, mu) - log_rho_x) * (u_(t) - r); };
    if (x < mu) {
      const double lo = std::min(x, mu - spread) - 14.0 * s;
      return integrate_adaptive(integrand, lo, x, u_.discontinuities).value;
    }
    const double hi = std::max(x, mu + spread) + 14.0 * s;
    return -integrate_adaptive(integrand, x, hi, u_.discontinuities).value;
  }

  // Compares the supplied sup norm with the largest |u| seen at quadrature nodes.
  void check_sup_norm() {
    const MixtureDecomposition dec = decompose(params_);
    const double s = params_.sigma();
    double seen = 0.0;
    for (double z : gauss_hermite_64().nodes) {
      seen = std::max({seen, std::abs(u_(dec.mean_plus + s * z)), std::abs(u_(dec.mean_minus + s * z))});
    }
    if (u_.sup_norm <= 0.0) {
      u_.sup_norm = seen;
    } else if (seen > u_.sup_norm * (1.0 + 1e-12)) {
      std::clog << "warning: sup|u| for '" << u_.name << "' observed as " << seen << " above the declared "
                << u_.sup_norm << '\n';
    }
  }

  MixtureGaussianParams params_;
  TestFunction u_;
  double r_ = 0.0;
  double r_prime_ = 0.0;
};

inline SteinSolution solve_stein(const MixtureGaussianParams& params, const TestFunction& u) {
  return SteinSolution(params, u);
}

inline SteinSolution solve_stein(const MixtureGaussianParams& params, const TestFunction& u,
                                 std::vector<double> discontinuities) {
  TestFunction copy = u;
  std::sort(discontinuities.begin(), discontinuities.end());
  copy.discontinuities = std::move(discontinuities);
  return SteinSolution(params, copy);
}

inline void check_weights(std::span<const double> points, std::span<const double> weights, const char* who) {
  if (points.size() != weights.size() || points.empty()) {
    throw invalid_argument(std::string(who) + ": points and weights must be non-empty and of equal length");
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (std::abs(total - 1.0) > 1e-12) throw invalid_argument(std::string(who) + ": weights must sum to 1");
}

// max over the battery of |sum_i w_i T f_u(x_i)|, f_u solving the Stein
// equation for u.
inline double stein_discrepancy(const MixtureGaussianParams& params, std::span<const double> points,
                                std::span<const double> weights, const std::vector<TestFunction>& battery) {
  check_weights(points, weights, "stein_discrepancy");
  double worst = 0.0;
  for (const TestFunction& u : battery) {
    const SteinSolution sol(params, u);
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const SteinValue v = sol.value(points[i]);
      acc += weights[i] * (v.f_x - stein_drift(params, points[i]) * v.f);
    }
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

// A differentiable f with its derivative, for applying T directly.
struct DifferentiableFunction {
  std::function<double(double)> f;
  std::function<double(double)> fprime;
};

// max over the battery of |sum_i w_i T f(x_i)| for explicitly given f.
inline double operator_discrepancy(const MixtureGaussianParams& params, std::span<const double> points,
                                   std::span<const double> weights, const std::vector<DifferentiableFunction>& battery) {
  check_weights(points, weights, "operator_discrepancy");
  double worst = 0.0;
  for (const auto& fn : battery) {
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) acc += weights[i] * stein_apply(params, fn.f, fn.fprime, points[i]);
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

}  // namespace skstein
