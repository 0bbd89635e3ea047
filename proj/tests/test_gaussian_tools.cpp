#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "skstein/approx_lemma_sk.hpp"
#include "skstein/gaussian_tools.hpp"
#include "skstein/tap.hpp"

using namespace skstein;

namespace {

void check_sides(const LemmaSides& s, double closed_form) {
  INFO("lhs " << s.lhs << " +/- " << s.lhs_std_error << ", rhs " << s.rhs << " +/- " << s.rhs_std_error);
  CHECK(s.agree());
  CHECK(std::abs(s.lhs - closed_form) <= 4.0 * s.lhs_std_error + 1e-12);
  CHECK(std::abs(s.rhs - closed_form) <= 4.0 * s.rhs_std_error + 1e-12);
}

}  // namespace

TEST_CASE("Gaussian integration by parts") {
  auto within = [](ResidualEstimate r) { return r.residual <= 4.0 * r.std_error + 1e-15; };
  CHECK(within(ibp_residual([](double) { return 1.0; }, [](double) { return 0.0; }, 100000, 1)));
  CHECK(within(ibp_residual([](double x) { return x; }, [](double) { return 1.0; }, 100000, 2)));
  CHECK(within(ibp_residual([](double x) { return std::tanh(x); },
                            [](double x) { return 1.0 / (std::cosh(x) * std::cosh(x)); }, 1000000, 3)));
  CHECK(within(ibp_residual([](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }, 200000, 4)));
  CHECK(within(ibp_residual([](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); }, 200000, 5)));
  CHECK(within(ibp_residual([](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                            [](double x) {
                              const double s = 1.0 / (1.0 + std::exp(-x));
                              return s * (1.0 - s);
                            },
                            200000, 6)));
  CHECK(within(ibp_residual([](double x) { return std::exp(-x * x); }, [](double x) { return -2 * x * std::exp(-x * x); },
                            200000, 7)));
}

TEST_CASE("second-moment identity for analytic families") {
  check_sides(approximation_lemma_sides(constant_family({1.0, 2.0, 2.0}), 100000, 11), 9.0);
  check_sides(approximation_lemma_sides(identity_family(5), 100000, 12), 10.0);
  check_sides(approximation_lemma_sides(shift_family(5), 100000, 13), 5.0);
  CHECK_THROWS_AS(approximation_lemma_sides(identity_family(3), 999, 1), skstein::invalid_argument);

  SmoothFieldFamily broken{1, [](std::span<const double>, std::size_t) { return std::nan(""); },
                           [](std::span<const double>, std::size_t, std::size_t) { return 0.0; }};
  CHECK_THROWS_AS(approximation_lemma_sides(broken, 1000, 1), skstein::numeric_failure);
}

TEST_CASE("analytic gradients agree with finite differences") {
  CHECK(gradient_consistency(constant_family({0.5, -1.0}), 20, 1) <= 1e-6);
  CHECK(gradient_consistency(identity_family(4), 20, 2) <= 1e-6);
  CHECK(gradient_consistency(shift_family(4), 20, 3) <= 1e-6);
  SmoothFieldFamily nonlinear{3,
                              [](std::span<const double> g, std::size_t j) { return std::tanh(g[j] * g[(j + 1) % 3]); },
                              [](std::span<const double> g, std::size_t j, std::size_t k) {
                                const double a = g[j];
                                const double b = g[(j + 1) % 3];
                                const double d = 1.0 / (std::cosh(a * b) * std::cosh(a * b));
                                if (k == j) return d * b;
                                if (k == (j + 1) % 3) return d * a;
                                return 0.0;
                              }};
  CHECK(gradient_consistency(nonlinear, 20, 4) <= 1e-6);
}

TEST_CASE("second-moment identity on the SK quenched fields") {
  const auto u = make_test_function("tanh", 0.25, 0.3);
  SECTION("N = 8, beta = 0.25, h = 0.3, 200 replications") {
    const ModelParams params{8, 0.25, 0.3};
    const double q = q_fixed_point(0.25, 0.3).q;
    const auto g = sample_disorder(8, 2);
    const auto s = approximation_lemma_sk(params, g, q, u, 200, 3);
    INFO("lhs " << s.lhs << " rhs " << s.rhs << " diff stderr " << s.diff_std_error);
    CHECK(s.agree());
    const auto again = approximation_lemma_sk(params, g, q, u, 200, 3);
    CHECK(again.lhs == s.lhs);
    CHECK(again.rhs == s.rhs);
  }
  SECTION("beta = 0 makes tanh(beta x + h) constant, so every field vanishes") {
    const ModelParams params{6, 0.0, 0.3};
    const double q = q_fixed_point(0.0, 0.3).q;
    const auto s = approximation_lemma_sk(params, sample_disorder(6, 4), q, make_test_function("tanh", 0.0, 0.3), 50, 5);
    CHECK(s.lhs <= 1e-20);
    CHECK(s.rhs <= 1e-20);
  }
  SECTION("beta = 0 with a non-constant u") {
    const ModelParams params{6, 0.0, 0.3};
    const double q = q_fixed_point(0.0, 0.3).q;
    const auto s = approximation_lemma_sk(params, sample_disorder(6, 4), q, make_test_function("sin", 0.0, 0.3), 200, 5);
    CHECK(s.agree());
  }
  SECTION("errors") {
    CHECK_THROWS_AS(approximation_lemma_sk({15, 0.2, 0.1}, sample_disorder(15, 1), 0.0, u, 10, 1), skstein::capacity_exceeded);
    CHECK_THROWS_AS(approximation_lemma_sk({6, 0.2, 0.1}, sample_disorder(6, 1), 0.0, indicator_below(0.0), 10, 1),
                    skstein::invalid_argument);
  }
}
