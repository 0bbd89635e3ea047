#pragma once

// Exact-identity suite. Each check compares a library path against an
// independently coded oracle (adaptive quadrature, bisection, closed forms).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/differentiation/finite_difference.hpp>

#include "skstein/experiments/report.hpp"
#include "skstein/mixture.hpp"
#include "skstein/quadrature.hpp"
#include "skstein/rng.hpp"
#include "skstein/sk_model.hpp"
#include "skstein/stein.hpp"
#include "skstein/tap.hpp"
#include "skstein/test_functions.hpp"

namespace skstein::experiments {

namespace selftest {

inline Check bounded(std::string name, double worst, double tol) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "max error %.3e (tolerance %.0e)", worst, tol);
  return {std::move(name), worst <= tol ? check_status::pass : check_status::fail, buf};
}

inline double uniform_in(counter_stream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// E[fn(X)] for X ~ M by adaptive quadrature of fn * density.
template <class Fn>
double mixture_integral(const MixtureGaussianParams& p, Fn&& fn) {
  const auto [lo, hi] = support_window(p, 14.0);
  const MixtureDecomposition d = decompose(p);
  const double cuts[] = {std::min(d.mean_minus, d.mean_plus), std::max(d.mean_minus, d.mean_plus)};
  return integrate_adaptive([&](double x) { return fn(x) * density(p, x); }, lo, hi, cuts).value;
}

inline std::vector<MixtureGaussianParams> mixture_cases(std::size_t count, std::uint64_t seed) {
  counter_stream rng(seed, stream_id::mixture, 7);
  std::vector<MixtureGaussianParams> out;
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back({uniform_in(rng, -2.0, 2.0), uniform_in(rng, -2.0, 2.0), uniform_in(rng, -3.0, 3.0),
                   uniform_in(rng, 0.25, 4.0)});
  }
  return out;
}

inline Check callen_check() {
  counter_stream rng(1, stream_id::auxiliary, 7);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + rng.below(11);
    const ModelParams params{n, uniform_in(rng, 0.0, 1.0), uniform_in(rng, -1.0, 1.0)};
    const DisorderMatrix g = sample_disorder(n, rng());
    const ExactGibbsTable table = build_exact_gibbs(params, g);
    worst = std::max(worst, callen_identity_residual(table, g, rng.below(n)));
  }
  return bounded("Callen identity, 100 random cases", worst, 1e-12);
}

inline std::vector<Check> mixture_checks() {
  double norm = 0.0;
  double decomposition = 0.0;
  double tanh_id = 0.0;
  for (const auto& p : mixture_cases(50, 3)) {
    norm = std::max(norm, std::abs(mixture_integral(p, [](double) { return 1.0; }) - 1.0));
    const MixtureDecomposition d = decompose(p);
    const auto [lo, hi] = support_window(p);
    for (int i = 0; i <= 100; ++i) {
      const double x = lo + (hi - lo) * i / 100.0;
      const double two = d.p * gaussian_density(d.mean_plus, d.sigma2, x) +
                         (1.0 - d.p) * gaussian_density(d.mean_minus, d.sigma2, x);
      decomposition = std::max(decomposition, std::abs(density(p, x) - two));
    }
    const double lhs = mixture_integral(p, [&](double x) { return std::tanh(p.a * x + p.b); });
    tanh_id = std::max(tanh_id, std::abs(lhs - tanh_moment(p)));
  }
  return {bounded("mixture normalization, 50 cases", norm, 1e-10),
          bounded("mixture decomposition pointwise, 50 cases", decomposition, 1e-13),
          bounded("tanh moment identity, 50 cases", tanh_id, 1e-8)};
}

inline Check onsager_check() {
  counter_stream rng(5, stream_id::mixture, 8);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double mu2 = uniform_in(rng, -1.5, 1.0);
    const double mu1 = mu2 + uniform_in(rng, 0.05, 2.0);
    const OnsagerCheck c = onsager_identity_check(uniform_in(rng, 0.05, 0.95), mu1, mu2, uniform_in(rng, 0.3, 2.0));
    worst = std::max(worst, std::abs(c.lhs - c.rhs));
  }
  return bounded("Onsager identity, 20 cases", worst, 1e-8);
}

inline const std::vector<MixtureGaussianParams>& stein_cases() {
  static const std::vector<MixtureGaussianParams> cases{
      {0.0, 0.0, 0.0, 1.0}, {0.25, 0.3, 0.1, 0.96}, {1.0, 0.5, -0.3, 1.44}, {0.5, 0.0, 0.0, 1.0}, {1.5, -0.4, 0.2, 0.6}};
  return cases;
}

inline Check characterizing_check() {
  double worst = 0.0;
  for (const auto& p : stein_cases()) {
    const std::vector<DifferentiableFunction> battery{
        {[](double) { return 1.0; }, [](double) { return 0.0; }},
        {[](double x) { return x; }, [](double) { return 1.0; }},
        {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }},
        {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }},
        {[&p](double x) { return std::tanh(p.a * x + p.b); },
         [&p](double x) {
           const double t = std::tanh(p.a * x + p.b);
           return p.a * (1.0 - t * t);
         }},
        {[](double x) { return std::exp(-x * x); }, [](double x) { return -2.0 * x * std::exp(-x * x); }},
    };
    for (const auto& fn : battery) {
      const double e = mixture_integral(p, [&](double x) { return stein_apply(p, fn.f, fn.fprime, x); });
      worst = std::max(worst, std::abs(e));
    }
  }
  return bounded("E[Tf(X)] = 0 for the 6-function battery", worst, 1e-8);
}

// f' - drift f - (u - r) with f' from an 8th-order finite difference of the
// solver's f, on 10^3 points.
inline Check ode_residual_check() {
  const MixtureGaussianParams p{0.25, 0.3, 0.1, 0.96};
  const TestFunction u = make_test_function("tanh", 0.25, 0.3);
  const SteinSolution sol = solve_stein(p, u);
  const double s = p.sigma();
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = p.mu - 8.0 * s + 16.0 * s * i / 999.0;
    auto f = [&](double t) { return sol.value(t).f; };
    const double deriv = boost::math::differentiation::finite_difference_derivative<decltype(f), double, 8>(f, x);
    const double residual = deriv - stein_drift(p, x) * f(x) - (u(x) - sol.r());
    worst = std::max(worst, std::abs(residual));
  }
  return bounded("Stein equation residual on 1000 points", worst, 1e-8);
}

// Standard Gaussian, u = 1{x <= 0}: f(x) = sqrt(2 pi) e^{x^2/2} (Phi(min(x,0)) - Phi(x)/2).
inline double gaussian_indicator_solution(double x) {
  const double root = std::sqrt(2.0 * std::numbers::pi);
  if (x < 0.0) return root * std::exp(0.5 * x * x) * 0.5 * normal_cdf(x);
  return root * std::exp(0.5 * x * x) * 0.25 * std::erfc(x / std::numbers::sqrt2);
}

inline Check gaussian_closed_form_check() {
  const SteinSolution sol = solve_stein({0.0, 0.0, 0.0, 1.0}, indicator_below(0.0));
  double worst = 0.0;
  for (int i = 0; i <= 240; ++i) {
    const double x = -6.0 + 0.05 * i;
    worst = std::max(worst, std::abs(sol.value(x).f - gaussian_indicator_solution(x)));
  }
  return bounded("Gaussian Stein solution vs closed form", worst, 1e-8);
}

// Root of q - E tanh^2(beta z sqrt q + h) by bisection, the expectation by
// adaptive quadrature against the normal density.
inline double q_by_bisection(double beta, double h) {
  auto gap = [&](double q) {
    const double s = beta * std::sqrt(q);
    const double e = integrate_adaptive(
                         [&](double z) {
                           const double t = std::tanh(s * z + h);
                           return t * t * normal_pdf(z);
                         },
                         -14.0, 14.0)
                         .value;
    return q - e;
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<Check> q_checks() {
  bool zero_ok = true;
  for (double beta : {0.0, 0.25, 0.5, 0.9, 1.0}) zero_ok &= q_fixed_point(beta, 0.0).q == 0.0;
  double tanh_err = 0.0;
  for (double h : {-1.0, -0.3, 0.2, 0.7, 1.0, 2.0}) {
    const double t = std::tanh(h);
    tanh_err = std::max(tanh_err, std::abs(q_fixed_point(0.0, h).q - t * t));
  }
  double bisect_err = 0.0;
  for (auto [beta, h] : {std::pair{0.3, 0.5}, {0.25, 0.3}, {0.8, 0.2}, {0.5, -0.6}}) {
    bisect_err = std::max(bisect_err, std::abs(q_fixed_point(beta, h).q - q_by_bisection(beta, h)));
  }
  return {{"q(beta, 0) = 0 exactly for beta <= 1", zero_ok ? check_status::pass : check_status::fail, ""},
          bounded("q(0, h) = tanh^2(h)", tanh_err, 1e-12), bounded("q against bisection", bisect_err, 1e-10)};
}

}  // namespace selftest

inline std::vector<Check> exact_identity_checks() {
  std::vector<Check> out{selftest::callen_check()};
  for (auto& c : selftest::mixture_checks()) out.push_back(std::move(c));
  out.push_back(selftest::onsager_check());
  out.push_back(selftest::characterizing_check());
  out.push_back(selftest::ode_residual_check());
  out.push_back(selftest::gaussian_closed_form_check());
  for (auto& c : selftest::q_checks()) out.push_back(std::move(c));
  return out;
}

}  // namespace skstein::experiments
