#pragma once

// Heat-bath (Glauber) sampler for the SK Gibbs measure. Site i is refreshed
// from its exact conditional law: +1 with probability (1 + tanh(beta l_i + h)) / 2.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "skstein/errors.hpp"
#include "skstein/rng.hpp"
#include "skstein/sk_model.hpp"
#include "skstein/stats.hpp"

namespace skstein {

inline double heat_bath_up_probability(double beta, double h, double local) {
  return 0.5 * (1.0 + std::tanh(beta * local + h));
}

class GlauberChain {
 public:
  // `substream` separates chains sharing a seed (e.g. the two replicas).
  GlauberChain(ModelParams params, DisorderMatrix disorder, std::uint64_t seed, std::uint32_t substream = 0)
      : params_(params),
        disorder_(std::move(disorder)),
        dense_(disorder_.dense()),
        rng_(seed, stream_id::chain, substream),
        spins_(params.n_sites) {
    params_.validate();
    if (params_.n_sites != disorder_.n_sites()) throw invalid_argument("GlauberChain: params/disorder size mismatch");
    for (int& s : spins_) s = rng_.uniform() < 0.5 ? 1 : -1;
  }

  const ModelParams& params() const { return params_; }
  const DisorderMatrix& disorder() const { return disorder_; }
  std::size_t sweeps_done() const { return sweeps_; }
  SpinConfig state() const { return SpinConfig(spins_); }
  std::span<const int> spins() const { return spins_; }

  // N heat-bath updates in site order 0..N-1.
  void sweep() {
    const std::size_t n = spins_.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &dense_[i * n];
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * spins_[j];
      const double up = heat_bath_up_probability(params_.beta, params_.h, acc * scale);
      spins_[i] = rng_.uniform() < up ? 1 : -1;
    }
    ++sweeps_;
  }

  void run(std::size_t sweeps) {
    for (std::size_t k = 0; k < sweeps; ++k) sweep();
  }

 private:
  ModelParams params_;
  DisorderMatrix disorder_;
  std::vector<double> dense_;
  counter_stream rng_;
  std::vector<int> spins_;
  std::size_t sweeps_ = 0;
};

inline GlauberChain sweep(GlauberChain chain) {
  chain.sweep();
  return chain;
}

struct MarginalEstimate {
  std::vector<double> means;
  std::vector<double> std_errors;
};

inline MarginalEstimate estimate_marginals(GlauberChain& chain, std::size_t burnin, std::size_t thin,
                                           std::size_t draws) {
  if (draws < 100) throw invalid_argument("estimate_marginals: at least 100 draws required");
  if (thin == 0) throw invalid_argument("estimate_marginals: thin must be positive");
  const std::size_t n = chain.params().n_sites;
  chain.run(burnin);
  std::vector<std::vector<double>> series(n, std::vector<double>(draws));
  for (std::size_t d = 0; d < draws; ++d) {
    chain.run(thin);
    const auto s = chain.spins();
    for (std::size_t i = 0; i < n; ++i) series[i][d] = s[i];
  }
  MarginalEstimate out{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const mean_estimate e = batch_means(series[i]);
    out.means[i] = e.mean;
    out.std_errors[i] = e.std_error;
  }
  return out;
}

struct OverlapMoments {
  double m2 = 0.0;
  double m4 = 0.0;
  double m2_std_error = 0.0;
  double m4_std_error = 0.0;
};

// Moments of R12 - q from two independent chains on the same disorder.
inline OverlapMoments estimate_overlap_moments(const ModelParams& params, const DisorderMatrix& disorder, double q,
                                               std::size_t burnin, std::size_t thin, std::size_t draws,
                                               std::uint64_t seed) {
  if (draws < 100) throw invalid_argument("estimate_overlap_moments: at least 100 draws required");
  if (thin == 0) throw invalid_argument("estimate_overlap_moments: thin must be positive");
  GlauberChain first(params, disorder, seed, 0);
  GlauberChain second(params, disorder, seed, 1);
  first.run(burnin);
  second.run(burnin);
  const std::size_t n = params.n_sites;
  std::vector<double> d2(draws);
  std::vector<double> d4(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    first.run(thin);
    second.run(thin);
    const auto a = first.spins();
    const auto b = second.spins();
    int dot = 0;
    for (std::size_t i = 0; i < n; ++i) dot += a[i] * b[i];
    const double x = static_cast<double>(dot) / static_cast<double>(n) - q;
    d2[d] = x * x;
    d4[d] = d2[d] * d2[d];
  }
  const mean_estimate e2 = batch_means(d2);
  const mean_estimate e4 = batch_means(d4);
  return {e2.mean, e4.mean, e2.std_error, e4.std_error};
}

}  // namespace skstein
