#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "skstein/mcmc.hpp"
#include "skstein/sk_model.hpp"
#include "skstein/tap.hpp"

using namespace skstein;
using Catch::Matchers::WithinAbs;

TEST_CASE("heat-bath probability matches the energy difference") {
  counter_stream rng(3, stream_id::auxiliary, 9);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + rng.below(9);
    const ModelParams params{n, 2.0 * rng.uniform(), -1.0 + 2.0 * rng.uniform()};
    const auto g = sample_disorder(n, rng());
    const auto s = SpinConfig::from_index(n, rng.below(std::uint64_t{1} << n));
    const std::size_t i = rng.below(n);
    auto up = s;
    auto down = s;
    if (up[i] < 0) up = up.flipped(i);
    if (down[i] > 0) down = down.flipped(i);
    const double eu = energy_exponent(params, g, up);
    const double ed = energy_exponent(params, g, down);
    const double expected = 1.0 / (1.0 + std::exp(ed - eu));
    CHECK_THAT(heat_bath_up_probability(params.beta, params.h, local_field(g, s, i)), WithinAbs(expected, 1e-14));
  }
}

TEST_CASE("one sweep of the N = 3 chain fixes the Gibbs vector") {
  const ModelParams params{3, 0.9, 0.25};
  const auto g = sample_disorder(3, 5);
  const auto table = build_exact_gibbs(params, g);
  // K[a][b]: probability that a full sweep (sites 0, 1, 2 in order) maps a to b.
  double kernel[8][8] = {};
  for (std::size_t a = 0; a < 8; ++a) {
    std::vector<double> dist(8, 0.0);
    dist[a] = 1.0;
    for (std::size_t site = 0; site < 3; ++site) {
      std::vector<double> next(8, 0.0);
      for (std::size_t c = 0; c < 8; ++c) {
        if (dist[c] == 0.0) continue;
        const auto s = SpinConfig::from_index(3, c);
        const double up = heat_bath_up_probability(params.beta, params.h, local_field(g, s, site));
        const std::size_t plus = c | (std::size_t{1} << site);
        const std::size_t minus = c & ~(std::size_t{1} << site);
        next[plus] += dist[c] * up;
        next[minus] += dist[c] * (1.0 - up);
      }
      dist = next;
    }
    for (std::size_t b = 0; b < 8; ++b) kernel[a][b] = dist[b];
  }
  for (std::size_t b = 0; b < 8; ++b) {
    double mass = 0.0;
    for (std::size_t a = 0; a < 8; ++a) mass += table.probabilities[a] * kernel[a][b];
    CHECK_THAT(mass, WithinAbs(table.probabilities[b], 1e-12));
  }
}

TEST_CASE("sweep examples at beta = 0") {
  SECTION("one sweep gives independent spins with mean tanh(h)") {
    const auto g = sample_disorder(200, 1);
    GlauberChain chain({200, 0.0, 0.6}, g, 7);
    chain = sweep(chain);
    CHECK(chain.sweeps_done() == 1);
    double m = 0.0;
    for (int s : chain.spins()) m += s;
    m /= 200.0;
    // sd of a mean of 200 spins is at most 1/sqrt(200)
    CHECK(std::abs(m - std::tanh(0.6)) <= 4.0 / std::sqrt(200.0));
  }
  SECTION("uniform refresh at h = 0") {
    GlauberChain chain({5, 0.0, 0.0}, sample_disorder(5, 1), 9);
    std::vector<double> sums(5, 0.0);
    for (int k = 0; k < 10000; ++k) {
      chain.sweep();
      for (std::size_t i = 0; i < 5; ++i) sums[i] += chain.spins()[i];
    }
    for (double s : sums) CHECK(std::abs(s / 10000.0) <= 0.04);
  }
}

TEST_CASE("estimate_marginals") {
  SECTION("independent spins") {
    GlauberChain chain({6, 0.0, 0.7}, sample_disorder(6, 2), 4);
    const auto est = estimate_marginals(chain, 100, 1, 20000);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(est.means[i] - std::tanh(0.7)) <= 4.0 * est.std_errors[i]);
  }
  SECTION("N = 10 against enumeration, and determinism") {
    const ModelParams params{10, 0.25, 0.3};
    const auto g = sample_disorder(10, 10);
    const auto exact = spin_marginals(build_exact_gibbs(params, g));
    GlauberChain chain(params, g, 11);
    const auto est = estimate_marginals(chain, 1000, 10, 20000);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(est.means[i] - exact[i]) <= 4.0 * est.std_errors[i]);
    GlauberChain twin(params, g, 11);
    const auto again = estimate_marginals(twin, 1000, 10, 20000);
    CHECK(again.means == est.means);
    CHECK(again.std_errors == est.std_errors);
  }
  SECTION("argument errors") {
    GlauberChain chain({4, 0.1, 0.1}, sample_disorder(4, 1), 1);
    CHECK_THROWS_AS(estimate_marginals(chain, 0, 1, 99), skstein::invalid_argument);
    CHECK_THROWS_AS(estimate_marginals(chain, 0, 0, 100), skstein::invalid_argument);
    CHECK_THROWS_AS(GlauberChain({5, 0.1, 0.1}, sample_disorder(4, 1), 1), skstein::invalid_argument);
  }
}

TEST_CASE("estimate_overlap_moments") {
  const std::size_t n = 8;
  const double nn = 8.0;
  const auto free = estimate_overlap_moments({n, 0.0, 0.0}, sample_disorder(n, 3), 0.0, 100, 1, 40000, 12);
  CHECK(std::abs(free.m2 - 1.0 / nn) <= 4.0 * free.m2_std_error);
  CHECK(std::abs(free.m4 - (3 * nn - 2) / (nn * nn * nn)) <= 4.0 * free.m4_std_error);

  const ModelParams params{10, 0.25, 0.3};
  const double q = q_fixed_point(0.25, 0.3).q;
  const auto g = sample_disorder(10, 21);
  const auto est = estimate_overlap_moments(params, g, q, 1000, 10, 20000, 5);
  CHECK(std::abs(est.m2 - overlap_moment_exact2(build_exact_gibbs(params, g), q)) <= 4.0 * est.m2_std_error);
}

TEST_CASE("sampled estimators agree with enumeration across 20 seeds") {
  int failures = 0;
  int comparisons = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 4 + seed % 7;
    const ModelParams params{n, 0.4, 0.2};
    const double q = q_fixed_point(0.4, 0.2).q;
    const auto g = sample_disorder(n, 100 + seed);
    const auto table = build_exact_gibbs(params, g);
    const auto exact = spin_marginals(table);
    GlauberChain chain(params, g, seed);
    const auto est = estimate_marginals(chain, 500, 5, 4000);
    for (std::size_t i = 0; i < n; ++i) {
      ++comparisons;
      failures += std::abs(est.means[i] - exact[i]) > 4.0 * est.std_errors[i];
    }
    const auto mo = estimate_overlap_moments(params, g, q, 500, 5, 4000, seed);
    ++comparisons;
    failures += std::abs(mo.m2 - overlap_moment_exact2(table, q)) > 4.0 * mo.m2_std_error;
    ++comparisons;
    failures += std::abs(mo.m4 - overlap_moment_exact(table, q, 4)) > 4.0 * mo.m4_std_error;
  }
  INFO(failures << " of " << comparisons << " comparisons outside 4 standard errors");
  CHECK(failures == 0);
}
