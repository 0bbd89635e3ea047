#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "skstein/errors.hpp"

namespace skstein::experiments {

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
};

// OLS of log(value) on log(n).
inline SlopeFit fit_decay_exponent(std::span<const double> n, std::span<const double> values) {
  if (n.size() != values.size()) throw invalid_argument("fit_decay_exponent: length mismatch");
  if (n.size() < 3) throw invalid_argument("fit_decay_exponent: at least three rows required");
  const std::size_t k = n.size();
  std::vector<double> x(k);
  std::vector<double> y(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(n[i] > 0.0) || !(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw invalid_argument("fit_decay_exponent: N and values must be positive");
    }
    x[i] = std::log(n[i]);
    y[i] = std::log(values[i]);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw invalid_argument("fit_decay_exponent: N values must not all coincide");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    rss += e * e;
  }
  fit.std_error = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
  return fit;
}

}  // namespace skstein::experiments
