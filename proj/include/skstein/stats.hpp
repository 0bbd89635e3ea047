#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "skstein/errors.hpp"

namespace skstein {

// Neumaier-compensated running sum.
class compensated_sum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Welford mean / variance.
class running_stats {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }
  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double stderr_of_mean() const {
    return count_ > 1 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct mean_estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline mean_estimate iid_mean(std::span<const double> xs) {
  running_stats acc;
  for (double x : xs) acc.add(x);
  return {acc.mean(), acc.stderr_of_mean()};
}

// Batch-means estimate for a correlated series. The series is cut into
// `batches` contiguous blocks of equal length (the remainder is dropped from
// the error estimate but kept in the mean).
inline mean_estimate batch_means(std::span<const double> xs, std::size_t batches = 20) {
  if (xs.size() < 2 * batches) throw invalid_argument("batch_means: series shorter than 2 x batches");
  compensated_sum total;
  for (double x : xs) total.add(x);
  const std::size_t len = xs.size() / batches;
  running_stats across;
  for (std::size_t b = 0; b < batches; ++b) {
    compensated_sum s;
    for (std::size_t k = 0; k < len; ++k) s.add(xs[b * len + k]);
    across.add(s.value() / static_cast<double>(len));
  }
  return {total.value() / static_cast<double>(xs.size()), across.stderr_of_mean()};
}

}  // namespace skstein
