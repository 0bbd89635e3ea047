#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "skstein/errors.hpp"
#include "skstein/rng.hpp"

namespace skstein {

// Walker/Vose alias table: O(n) setup, O(1) per draw.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> probabilities) : prob_(probabilities.size()), alias_(probabilities.size()) {
    const std::size_t n = probabilities.size();
    if (n == 0) throw invalid_argument("AliasTable: empty distribution");
    double total = 0.0;
    for (double p : probabilities) {
      if (!(p >= 0.0)) throw invalid_argument("AliasTable: negative or NaN probability");
      total += p;
    }
    if (!(total > 0.0)) throw invalid_argument("AliasTable: zero total mass");

    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small;
    std::vector<std::uint32_t> large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = probabilities[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      small.pop_back();
      const std::uint32_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    // Leftovers are 1 up to rounding.
    for (std::uint32_t i : large) {
      prob_[i] = 1.0;
      alias_[i] = i;
    }
    for (std::uint32_t i : small) {
      prob_[i] = 1.0;
      alias_[i] = i;
    }
  }

  std::size_t size() const { return prob_.size(); }

  std::size_t sample(counter_stream& rng) const {
    const std::size_t column = rng.below(prob_.size());
    return rng.uniform() < prob_[column] ? column : alias_[column];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace skstein
